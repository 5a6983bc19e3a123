#pragma once

#include <cstdint>

#include "matchci/dataset.hpp"

namespace matchci {

enum class Metric { frr, far };
enum class Setting { balanced, unbalanced };

const char* metric_name(Metric m);

struct ErrorEstimate {
  Metric metric = Metric::frr;
  double value = 0.0;
  std::int64_t n_effective_naive = 0;  // unordered comparison count
  Setting setting = Setting::balanced;
};

// Balanced estimators: unweighted means of the diagonal / off-diagonal cells.
ErrorEstimate estimate_frr_balanced(const PairAggregates& agg);
ErrorEstimate estimate_far_balanced(const PairAggregates& agg);

// Unbalanced estimators: cells weighted by their comparison counts, which
// makes both equal to the plain mean over comparison-level outcomes.
// Identities with fewer than two instances get zero weight in the FRR.
ErrorEstimate estimate_frr_unbalanced(const PairAggregates& agg);
ErrorEstimate estimate_far_unbalanced(const PairAggregates& agg);

// Dispatch on agg.balanced.
ErrorEstimate estimate_frr(const PairAggregates& agg);
ErrorEstimate estimate_far(const PairAggregates& agg);

std::int64_t naive_genuine_pairs(const PairAggregates& agg);   // sum_i m_i(m_i-1)/2
std::int64_t naive_impostor_pairs(const PairAggregates& agg);  // sum_{i<j} m_i m_j

}  // namespace matchci
