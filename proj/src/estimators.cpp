#include "matchci/estimators.hpp"

#include <cmath>

namespace matchci {

const char* metric_name(Metric m) { return m == Metric::frr ? "frr" : "far"; }

std::int64_t naive_genuine_pairs(const PairAggregates& agg) {
  return static_cast<std::int64_t>(agg.m_tilde.sum() / 2.0);
}

std::int64_t naive_impostor_pairs(const PairAggregates& agg) {
  double total = 0.0;
  for (int i = 0; i < agg.g(); ++i)
    for (int j = i + 1; j < agg.g(); ++j) total += agg.m(i) * agg.m(j);
  return static_cast<std::int64_t>(total);
}

ErrorEstimate estimate_frr_balanced(const PairAggregates& agg) {
  if (!agg.balanced)
    throw PreconditionError("balanced FRR estimator requires equal instance counts");
  if (agg.m(0) < 2)
    throw PreconditionError("FRR requires at least two instances per identity");
  return {Metric::frr, agg.y_bar.diagonal().mean(), naive_genuine_pairs(agg),
          Setting::balanced};
}

ErrorEstimate estimate_far_balanced(const PairAggregates& agg) {
  if (!agg.balanced)
    throw PreconditionError("balanced FAR estimator requires equal instance counts");
  const int g = agg.g();
  if (g < 2) throw PreconditionError("FAR requires at least two identities");
  double s = 0.0;
  for (int i = 0; i < g; ++i)
    for (int j = i + 1; j < g; ++j) s += 2.0 * agg.y_bar(i, j);
  return {Metric::far, s / (static_cast<double>(g) * (g - 1)), naive_impostor_pairs(agg),
          Setting::balanced};
}

ErrorEstimate estimate_frr_unbalanced(const PairAggregates& agg) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < agg.g(); ++i) {
    if (agg.m_tilde(i) > 0.0) {
      num += agg.m_tilde(i) * agg.y_bar(i, i);
      den += agg.m_tilde(i);
    }
  }
  if (den == 0.0)
    throw PreconditionError("FRR requires at least one identity with two instances");
  return {Metric::frr, num / den, naive_genuine_pairs(agg), Setting::unbalanced};
}

ErrorEstimate estimate_far_unbalanced(const PairAggregates& agg) {
  const int g = agg.g();
  if (g < 2) throw PreconditionError("FAR requires at least two identities");
  double num = 0.0, den = 0.0;
  for (int i = 0; i < g; ++i) {
    for (int j = i + 1; j < g; ++j) {
      const double w = agg.m(i) * agg.m(j);
      num += 2.0 * w * agg.y_bar(i, j);
      den += 2.0 * w;
    }
  }
  return {Metric::far, num / den, naive_impostor_pairs(agg), Setting::unbalanced};
}

ErrorEstimate estimate_frr(const PairAggregates& agg) {
  return agg.balanced ? estimate_frr_balanced(agg) : estimate_frr_unbalanced(agg);
}

ErrorEstimate estimate_far(const PairAggregates& agg) {
  return agg.balanced ? estimate_far_balanced(agg) : estimate_far_unbalanced(agg);
}

}  // namespace matchci
