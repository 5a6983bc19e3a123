#include "matchci/roc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "matchci/estimators.hpp"
#include "matchci/parallel.hpp"

namespace matchci {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxRedraws = 1000;

// Comparison-level view of a dataset: one entry per unordered instance pair,
// split by family and sorted by score. Shared by every bootstrap replicate so
// the sort happens once.
struct PairIndex {
  std::vector<double> imp_score, gen_score;  // each ascending
  std::vector<int> imp_a, imp_b;             // identity indices per impostor pair
  std::vector<int> gen_id;                   // identity index per genuine pair
  Eigen::VectorXd m;

  explicit PairIndex(const MatchDataset& ds) {
    const int n = ds.n_instances();
    m.resize(ds.g());
    for (int i = 0; i < ds.g(); ++i) m(i) = ds.m[static_cast<std::size_t>(i)];
    std::vector<std::pair<double, std::pair<int, int>>> imp;
    std::vector<std::pair<double, int>> gen;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        const double s = ds.score(a, b);
        const int ia = ds.inst_identity[static_cast<std::size_t>(a)];
        const int ib = ds.inst_identity[static_cast<std::size_t>(b)];
        if (ia == ib)
          gen.emplace_back(s, ia);
        else
          imp.emplace_back(s, std::make_pair(ia, ib));
      }
    if (gen.empty())
      throw PreconditionError("ROC needs at least one genuine comparison");
    if (imp.empty())
      throw PreconditionError("ROC needs at least one impostor comparison");
    std::sort(imp.begin(), imp.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    std::sort(gen.begin(), gen.end());
    for (const auto& [s, ids] : imp) {
      imp_score.push_back(s);
      imp_a.push_back(ids.first);
      imp_b.push_back(ids.second);
    }
    for (const auto& [s, id] : gen) {
      gen_score.push_back(s);
      gen_id.push_back(id);
    }
  }
};

// Step-function value at t: both curves change value only at observed scores,
// and on (t_k, t_{k+1}] they equal their value at t_{k+1}.
double value_at(const EmpiricalRoc& roc, const Eigen::VectorXd& values, double t) {
  if (std::isnan(t)) throw PreconditionError("ROC evaluation at NaN threshold");
  const double* begin = roc.thresholds.data();
  const double* end = begin + roc.thresholds.size();
  const auto it = std::lower_bound(begin, end, t);
  if (it == end) return values(roc.size() - 1);  // t above +inf cannot happen
  return values(static_cast<int>(it - begin));
}

struct ReplicateCurve {
  double frr = 0.0;
  bool valid = false;
};

// One vertical-averaging replicate: per-pair weights determined by the scheme
// at the identity level, cumulative walk over the impostor scores to invert
// FAR* at the target, then the reweighted FRR at that threshold.
ReplicateCurve replicate_frr_at_far(const PairIndex& idx, BootstrapScheme scheme,
                                    const Eigen::VectorXd& w, double target) {
  ReplicateCurve out;
  const std::size_t p = idx.imp_score.size();
  const double pd = static_cast<double>(p);

  // Vertex adds the same-identity swap mass spread uniformly over the pairs;
  // weights are scaled by the pair count to keep them integer-valued.
  double swap_total = 0.0;
  if (scheme == BootstrapScheme::vertex)
    for (int i = 0; i < w.size(); ++i)
      swap_total += w(i) * (w(i) - 1.0) * idx.m(i) * idx.m(i);

  auto pair_weight = [&](std::size_t q) {
    const double wa = w(idx.imp_a[q]);
    const double wb = w(idx.imp_b[q]);
    switch (scheme) {
      case BootstrapScheme::subsets: return wa + wb;
      case BootstrapScheme::vertex: return 2.0 * wa * wb * pd + swap_total;
      case BootstrapScheme::double_or_nothing: return wa * wb;
      case BootstrapScheme::two_level: break;
    }
    throw PreconditionError("vertical averaging is undefined for two-level resampling");
  };

  double total_imp = 0.0;
  for (std::size_t q = 0; q < p; ++q) total_imp += pair_weight(q);
  double total_gen = 0.0;
  for (const int id : idx.gen_id) total_gen += w(id);
  if (!(total_imp > 0.0) || !(total_gen > 0.0)) return out;

  // Smallest impostor score whose cumulative weight exceeds the budget; the
  // replicate FAR stays <= target up to and including that grid point.
  const double budget = target * total_imp;
  double threshold = kInf;
  double cum = 0.0;
  std::size_t q = 0;
  while (q < p) {
    const double s = idx.imp_score[q];
    double group = 0.0;
    for (; q < p && idx.imp_score[q] == s; ++q) group += pair_weight(q);
    if (cum + group > budget) {
      threshold = s;
      break;
    }
    cum += group;
  }

  double err = 0.0;
  const auto cut = std::lower_bound(idx.gen_score.begin(), idx.gen_score.end(), threshold);
  for (std::size_t g = static_cast<std::size_t>(cut - idx.gen_score.begin());
       g < idx.gen_score.size(); ++g)
    err += w(idx.gen_id[g]);
  out.frr = err / total_gen;
  out.valid = true;
  return out;
}

}  // namespace

EmpiricalRoc empirical_roc(const MatchDataset& ds) {
  const PairIndex idx(ds);
  std::vector<double> grid;
  grid.reserve(idx.imp_score.size() + idx.gen_score.size() + 2);
  grid.push_back(-kInf);
  std::merge(idx.imp_score.begin(), idx.imp_score.end(), idx.gen_score.begin(),
             idx.gen_score.end(), std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  grid.push_back(kInf);

  EmpiricalRoc roc;
  const int t = static_cast<int>(grid.size());
  roc.thresholds.resize(t);
  roc.far_at.resize(t);
  roc.frr_at.resize(t);
  const double np = static_cast<double>(idx.imp_score.size());
  const double ng = static_cast<double>(idx.gen_score.size());
  for (int k = 0; k < t; ++k) {
    const double tk = grid[static_cast<std::size_t>(k)];
    roc.thresholds(k) = tk;
    const auto below_imp =
        std::lower_bound(idx.imp_score.begin(), idx.imp_score.end(), tk) -
        idx.imp_score.begin();
    const auto below_gen =
        std::lower_bound(idx.gen_score.begin(), idx.gen_score.end(), tk) -
        idx.gen_score.begin();
    roc.far_at(k) = static_cast<double>(below_imp) / np;
    roc.frr_at(k) = (ng - static_cast<double>(below_gen)) / ng;
  }
  return roc;
}

double roc_far_at(const EmpiricalRoc& roc, double t) { return value_at(roc, roc.far_at, t); }

double roc_frr_at(const EmpiricalRoc& roc, double t) { return value_at(roc, roc.frr_at, t); }

double threshold_for_far(const EmpiricalRoc& roc, double target) {
  if (!(target >= 0.0 && target <= 1.0))
    throw PreconditionError("threshold_for_far: target must lie in [0,1]");
  const double* begin = roc.far_at.data();
  const double* end = begin + roc.far_at.size();
  const auto it = std::upper_bound(begin, end, target);
  return roc.thresholds(static_cast<int>(it - begin) - 1);  // far_at(0)=0 <= target
}

RocPointInterval roc_interval_parametric(const MatchDataset& ds, double target_far,
                                         double alpha, double alpha_far) {
  const EmpiricalRoc roc = empirical_roc(ds);
  const double t_hat = threshold_for_far(roc, target_far);
  const auto agg_hat = aggregate_pairs(ds, t_hat);
  const auto far_iv = wilson_interval(Metric::far, agg_hat, WilsonMode::adjusted, alpha_far);
  const double t_lb = threshold_for_far(roc, far_iv.lower);
  const double t_ub = threshold_for_far(roc, far_iv.upper);

  IntervalResult iv;
  iv.metric = Metric::frr;
  iv.method = "parametric_nested";
  iv.alpha = alpha;
  iv.point = estimate_frr(agg_hat).value;
  iv.lower = 1.0;
  iv.upper = 0.0;
  for (const double t : {t_lb, t_hat, t_ub}) {
    const auto frr_iv =
        wilson_interval(Metric::frr, aggregate_pairs(ds, t), WilsonMode::adjusted, alpha);
    iv.lower = std::min(iv.lower, frr_iv.lower);
    iv.upper = std::max(iv.upper, frr_iv.upper);
  }
  iv.diagnostics["threshold_lower"] = t_lb;
  iv.diagnostics["threshold_point"] = t_hat;
  iv.diagnostics["threshold_upper"] = t_ub;
  iv.diagnostics["far_lower"] = far_iv.lower;
  iv.diagnostics["far_point"] = far_iv.point;
  iv.diagnostics["far_upper"] = far_iv.upper;
  iv.diagnostics["alpha_far"] = alpha_far;

  RocPointInterval out;
  out.target_far = target_far;
  out.threshold_used = t_hat;
  out.interval = std::move(iv);
  out.method = "parametric_nested";
  out.alpha_far = alpha_far;
  return out;
}

RocPointInterval roc_interval_parametric(const MatchDataset& ds, double target_far,
                                         double alpha) {
  return roc_interval_parametric(ds, target_far, alpha, alpha);
}

RocPointInterval roc_interval_bootstrap(const MatchDataset& ds, double target_far,
                                        double alpha, BootstrapScheme scheme, int b,
                                        std::uint64_t seed, int threads) {
  if (scheme == BootstrapScheme::two_level)
    throw PreconditionError("vertical averaging is undefined for two-level resampling");
  if (!(target_far >= 0.0 && target_far <= 1.0))
    throw PreconditionError("roc_interval_bootstrap: target must lie in [0,1]");
  if (b < 100)
    throw PreconditionError("roc_interval_bootstrap: needs at least 100 replicates");

  const PairIndex idx(ds);
  const EmpiricalRoc roc = empirical_roc(ds);
  const double t_hat = threshold_for_far(roc, target_far);
  const int g = ds.g();

  BootstrapDistribution dist;
  dist.metric = Metric::frr;
  dist.scheme = scheme;
  dist.seed = seed;
  dist.values.resize(static_cast<std::size_t>(b));
  std::vector<std::int64_t> rejected(static_cast<std::size_t>(b), 0);
  parallel_for(b, threads, [&](std::int64_t r) {
    RngStream rng(seed, static_cast<std::uint64_t>(r));
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
      const Eigen::VectorXd w = scheme == BootstrapScheme::double_or_nothing
                                    ? draw_don_weights(g, rng)
                                    : draw_multinomial_weights(g, rng);
      const auto rep = replicate_frr_at_far(idx, scheme, w, target_far);
      if (rep.valid) {
        dist.values[static_cast<std::size_t>(r)] = rep.frr;
        rejected[static_cast<std::size_t>(r)] = attempt;
        return;
      }
    }
    throw ResamplingError("replicate " + std::to_string(r) + ": no valid weight draw in " +
                          std::to_string(kMaxRedraws) + " attempts");
  });
  dist.rejected_draws = std::accumulate(rejected.begin(), rejected.end(), std::int64_t{0});

  IntervalResult iv = percentile_interval(dist, alpha);
  iv.metric = Metric::frr;
  iv.point = roc_frr_at(roc, t_hat);
  iv.diagnostics["threshold_point"] = t_hat;
  iv.diagnostics["far_point"] = roc_far_at(roc, t_hat);

  RocPointInterval out;
  out.target_far = target_far;
  out.threshold_used = t_hat;
  out.interval = std::move(iv);
  out.method = "bootstrap_vertical";
  return out;
}

}  // namespace matchci
