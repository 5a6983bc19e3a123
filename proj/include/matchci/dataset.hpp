#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "matchci/errors.hpp"

namespace matchci {

// Instances grouped by identity; instance rows for one identity are
// contiguous. Scores are dissimilarities: a pair is classified genuine when
// its score falls below the decision threshold. Either a dense symmetric
// score table, an embedding matrix (scores = Euclidean distances), or both
// may be present.
struct MatchDataset {
  std::vector<std::string> identity_labels;  // size G
  std::vector<int> m;                        // instances per identity
  std::vector<int> offset;                   // size G+1, prefix sums of m
  std::vector<int> inst_identity;            // size N, instance -> identity
  std::vector<std::string> instance_labels;  // size N (optional; empty = use indices)
  Eigen::MatrixXd embeddings;                // N x d, or empty
  Eigen::MatrixXd scores;                    // N x N symmetric, NaN = missing, or empty

  int g() const { return static_cast<int>(m.size()); }
  int n_instances() const { return offset.empty() ? 0 : offset.back(); }
  bool has_embeddings() const { return embeddings.size() > 0; }
  bool has_scores() const { return scores.size() > 0; }
  bool balanced() const;

  double score(int a, int b) const;  // throws when the pair has no score
  void materialize_scores();         // fill the table from embeddings
  void validate() const;             // structural consistency checks

  std::string instance_name(int inst) const;
};

// One thresholded comparison. `value` is the error indicator: for a genuine
// pair 1{s >= t} (false rejection), for an impostor pair 1{s < t} (false
// acceptance). Self-comparisons are never emitted.
struct ComparisonOutcome {
  int inst_a = 0, inst_b = 0;  // global instance indices, inst_a < inst_b
  bool genuine = false;
  int value = 0;
};

// Identity-level aggregates: y_bar(i,j) is the mean outcome over all ordered
// instance pairs of identities (i,j); the diagonal uses ordered within-identity
// pairs and is NaN for identities with fewer than two instances. Since scores
// are symmetric the ordered means equal the unordered ones, and `err` keeps
// unordered error counts per cell when aggregation saw raw outcomes.
struct PairAggregates {
  Eigen::MatrixXd y_bar;   // G x G symmetric
  Eigen::MatrixXd counts;  // ordered pair counts: m_i(m_i-1) diag, m_i m_j off
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> err;
  bool has_outcome_store = false;  // whether `err` is populated
  Eigen::VectorXd m;               // integer-valued instance counts
  Eigen::VectorXd m_tilde;         // m_i (m_i - 1)
  bool balanced = false;

  int g() const { return static_cast<int>(m.size()); }
};

// Streams every unordered cross- and within-identity comparison through fn.
template <class Fn>
void for_each_outcome(const MatchDataset& ds, double threshold, Fn&& fn) {
  const int n = ds.n_instances();
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const bool genuine = ds.inst_identity[a] == ds.inst_identity[b];
      const double s = ds.score(a, b);
      const int value = genuine ? (s >= threshold ? 1 : 0) : (s < threshold ? 1 : 0);
      fn(ComparisonOutcome{a, b, genuine, value});
    }
  }
}

std::vector<ComparisonOutcome> threshold_outcomes(const MatchDataset& ds, double threshold);

PairAggregates aggregate_pairs(const MatchDataset& ds, double threshold);

// Builds aggregates directly from a mean matrix (no outcome store). Used by
// tests and by callers that already have cell means.
PairAggregates make_aggregates(const Eigen::MatrixXd& y_bar, const Eigen::VectorXd& m);

}  // namespace matchci
