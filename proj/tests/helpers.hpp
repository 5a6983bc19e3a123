#pragma once

#include <Eigen/Dense>
#include <vector>

#include "matchci/dataset.hpp"
#include "matchci/rng.hpp"

namespace matchci::testing {

// Dataset with the given per-identity instance counts and a dense symmetric
// score table supplied by score(a, b) over global instance indices.
template <class ScoreFn>
MatchDataset make_score_dataset(const std::vector<int>& m, ScoreFn&& score) {
  MatchDataset ds;
  ds.m = m;
  ds.offset.resize(m.size() + 1, 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    ds.identity_labels.push_back("id" + std::to_string(i + 1));
    ds.offset[i + 1] = ds.offset[i] + m[i];
    for (int k = 0; k < m[i]; ++k) ds.inst_identity.push_back(static_cast<int>(i));
  }
  const int n = ds.offset.back();
  ds.scores.setConstant(n, n, std::numeric_limits<double>::quiet_NaN());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) ds.scores(a, b) = ds.scores(b, a) = score(a, b);
  return ds;
}

inline MatchDataset random_dataset(const std::vector<int>& m, RngStream& rng) {
  Eigen::MatrixXd s;
  MatchDataset ds = make_score_dataset(m, [](int, int) { return 0.0; });
  const int n = ds.n_instances();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) ds.scores(a, b) = ds.scores(b, a) = rng.uniform();
  return ds;
}

// Random symmetric mean matrix with entries in [0,1]; diagonal kept for
// identities with at least two instances.
inline Eigen::MatrixXd random_y_bar(int g, RngStream& rng) {
  Eigen::MatrixXd y(g, g);
  for (int i = 0; i < g; ++i) {
    y(i, i) = rng.uniform();
    for (int j = i + 1; j < g; ++j) y(i, j) = y(j, i) = rng.uniform();
  }
  return y;
}

}  // namespace matchci::testing
