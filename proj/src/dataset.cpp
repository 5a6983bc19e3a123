#include "matchci/dataset.hpp"

#include <cmath>
#include <limits>

namespace matchci {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

bool MatchDataset::balanced() const {
  for (int mi : m)
    if (mi != m[0]) return false;
  return !m.empty();
}

double MatchDataset::score(int a, int b) const {
  if (has_scores()) {
    const double v = scores(a, b);
    if (std::isnan(v))
      throw PreconditionError("missing score for pair (" + instance_name(a) + ", " +
                              instance_name(b) + ")");
    return v;
  }
  if (has_embeddings()) return (embeddings.row(a) - embeddings.row(b)).norm();
  throw PreconditionError("dataset has neither scores nor embeddings");
}

void MatchDataset::materialize_scores() {
  if (has_scores()) return;
  if (!has_embeddings())
    throw PreconditionError("cannot materialize scores without embeddings");
  const int n = n_instances();
  scores.resize(n, n);
  scores.diagonal().setConstant(kNaN);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double s = (embeddings.row(a) - embeddings.row(b)).norm();
      scores(a, b) = s;
      scores(b, a) = s;
    }
  }
}

std::string MatchDataset::instance_name(int inst) const {
  const int id = inst_identity[inst];
  const std::string inst_label = instance_labels.empty()
                                     ? std::to_string(inst - offset[id])
                                     : instance_labels[inst];
  return identity_labels[id] + "/" + inst_label;
}

void MatchDataset::validate() const {
  const int g_ = g();
  if (g_ == 0) throw PreconditionError("dataset has no identities");
  if (static_cast<int>(offset.size()) != g_ + 1)
    throw PreconditionError("dataset offsets inconsistent with identity count");
  for (int i = 0; i < g_; ++i) {
    if (m[i] < 1) throw PreconditionError("identity " + identity_labels[i] + " has no instances");
    if (offset[i + 1] - offset[i] != m[i])
      throw PreconditionError("dataset offsets inconsistent with instance counts");
  }
  const int n = n_instances();
  if (static_cast<int>(inst_identity.size()) != n)
    throw PreconditionError("instance-to-identity map has wrong size");
  if (has_scores() && (scores.rows() != n || scores.cols() != n))
    throw PreconditionError("score table dimensions do not match instance count");
  if (has_embeddings() && embeddings.rows() != n)
    throw PreconditionError("embedding row count does not match instance count");
  if (!has_scores() && !has_embeddings())
    throw PreconditionError("dataset has neither scores nor embeddings");
}

std::vector<ComparisonOutcome> threshold_outcomes(const MatchDataset& ds, double threshold) {
  std::vector<ComparisonOutcome> out;
  const std::int64_t n = ds.n_instances();
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for_each_outcome(ds, threshold, [&](const ComparisonOutcome& oc) { out.push_back(oc); });
  return out;
}

PairAggregates aggregate_pairs(const MatchDataset& ds, double threshold) {
  ds.validate();
  const int g = ds.g();
  PairAggregates agg;
  agg.m.resize(g);
  agg.m_tilde.resize(g);
  for (int i = 0; i < g; ++i) {
    agg.m(i) = ds.m[i];
    agg.m_tilde(i) = static_cast<double>(ds.m[i]) * (ds.m[i] - 1);
  }
  agg.err.setZero(g, g);
  for_each_outcome(ds, threshold, [&](const ComparisonOutcome& oc) {
    if (oc.value) {
      const int i = ds.inst_identity[oc.inst_a];
      const int j = ds.inst_identity[oc.inst_b];
      agg.err(i, j) += 1;
      if (i != j) agg.err(j, i) += 1;
    }
  });
  agg.has_outcome_store = true;
  agg.y_bar.resize(g, g);
  agg.counts.resize(g, g);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      if (i == j) {
        agg.counts(i, i) = agg.m_tilde(i);
        agg.y_bar(i, i) = agg.m_tilde(i) > 0
                              ? static_cast<double>(agg.err(i, i)) / (agg.m_tilde(i) / 2)
                              : kNaN;
      } else {
        agg.counts(i, j) = agg.m(i) * agg.m(j);
        agg.y_bar(i, j) = static_cast<double>(agg.err(i, j)) / agg.counts(i, j);
      }
    }
  }
  agg.balanced = ds.balanced();
  return agg;
}

PairAggregates make_aggregates(const Eigen::MatrixXd& y_bar, const Eigen::VectorXd& m) {
  const int g = static_cast<int>(m.size());
  if (y_bar.rows() != g || y_bar.cols() != g)
    throw PreconditionError("make_aggregates: y_bar must be G x G");
  PairAggregates agg;
  agg.m = m;
  agg.m_tilde = m.array() * (m.array() - 1.0);
  agg.y_bar = y_bar;
  agg.counts.resize(g, g);
  bool bal = true;
  for (int i = 0; i < g; ++i) {
    if (m(i) < 1.0 || m(i) != std::floor(m(i)))
      throw PreconditionError("make_aggregates: instance counts must be positive integers");
    bal &= (m(i) == m(0));
    for (int j = 0; j < g; ++j) {
      if (i == j) {
        agg.counts(i, i) = agg.m_tilde(i);
        if (agg.m_tilde(i) == 0.0) agg.y_bar(i, i) = kNaN;
      } else {
        agg.counts(i, j) = m(i) * m(j);
        if (std::abs(y_bar(i, j) - y_bar(j, i)) > 1e-12)
          throw PreconditionError("make_aggregates: y_bar must be symmetric");
      }
    }
  }
  agg.err.setZero(0, 0);
  agg.has_outcome_store = false;
  agg.balanced = bal;
  return agg;
}

}  // namespace matchci
