#include "matchci/variance.hpp"

#include <cmath>
#include <limits>

namespace matchci {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

VarianceEstimate clamp(Metric target, double raw, const char* name, double v12 = kNaN,
                       double cov = kNaN) {
  VarianceEstimate e;
  e.target = target;
  e.raw = raw;
  e.clamped = raw < 0.0;
  e.scaled_variance = e.clamped ? 0.0 : raw;
  e.estimator = name;
  e.var_y12 = v12;
  e.cov_y12_y13 = cov;
  return e;
}

void require_balanced(const PairAggregates& agg, const char* who) {
  if (!agg.balanced)
    throw PreconditionError(std::string(who) + " requires a balanced dataset");
}

// Double-double arithmetic for the FAR composite and its jackknife twin. Both
// are differences of nearly equal moment terms (at G = 3 the true value is
// identically zero), so plain doubles leave ~1e-17 of noise after the
// cancellation; carrying ~32 digits keeps the two algebraically equal forms
// within ~1e-29 of each other.
struct DD {
  double hi = 0.0, lo = 0.0;
};

DD two_sum(double a, double b) {
  const double s = a + b;
  const double v = s - a;
  return {s, (a - (s - v)) + (b - v)};
}

DD two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

DD dd_add(DD a, DD b) {
  DD s = two_sum(a.hi, b.hi);
  s.lo += a.lo + b.lo;
  return two_sum(s.hi, s.lo);
}

DD dd_sub(DD a, DD b) { return dd_add(a, {-b.hi, -b.lo}); }

DD dd_mul(DD a, DD b) {
  DD p = two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return two_sum(p.hi, p.lo);
}

DD dd_div(DD a, double b) {
  const double q1 = a.hi / b;
  const DD p = two_prod(q1, b);
  const double q2 = ((a.hi - p.hi) - p.lo + a.lo) / b;
  return two_sum(q1, q2);
}

DD dd_scale2(DD a) { return {2.0 * a.hi, 2.0 * a.lo}; }

double to_double(DD a) { return a.hi + a.lo; }

DD far_mean_dd(const PairAggregates& agg) {
  const int g = agg.g();
  DD total{};
  for (int i = 0; i < g; ++i)
    for (int j = i + 1; j < g; ++j) total = dd_add(total, dd_scale2({agg.y_bar(i, j), 0.0}));
  return dd_div(total, static_cast<double>(g) * (g - 1));
}

DD var_y12_dd(const PairAggregates& agg, DD far) {
  const int g = agg.g();
  DD s{};
  for (int i = 0; i < g; ++i)
    for (int j = i + 1; j < g; ++j) {
      const DD d = dd_sub({agg.y_bar(i, j), 0.0}, far);
      s = dd_add(s, dd_scale2(dd_mul(d, d)));
    }
  return dd_div(s, static_cast<double>(g) * (g - 1));
}

DD cov_y12_y13_dd(const PairAggregates& agg, DD far) {
  const int g = agg.g();
  // sum over ordered triples (i, j != i, k != i,j) of d_ij d_ik, via row sums:
  // for each i, (sum_j d_ij)^2 - sum_j d_ij^2.
  DD total{};
  for (int i = 0; i < g; ++i) {
    DD r{}, q{};
    for (int j = 0; j < g; ++j) {
      if (j == i) continue;
      const DD d = dd_sub({agg.y_bar(i, j), 0.0}, far);
      r = dd_add(r, d);
      q = dd_add(q, dd_mul(d, d));
    }
    total = dd_add(total, dd_sub(dd_mul(r, r), q));
  }
  return dd_div(total, static_cast<double>(g) * (g - 1) * (g - 2));
}

}  // namespace

VarianceEstimate var_frr_plugin(const PairAggregates& agg) {
  require_balanced(agg, "var_frr_plugin");
  if (agg.m(0) < 2)
    throw PreconditionError("var_frr_plugin requires at least two instances per identity");
  const double frr = estimate_frr_balanced(agg).value;
  const auto d = agg.y_bar.diagonal().array() - frr;
  return clamp(Metric::frr, d.square().mean(), "plugin");
}

double var_y12_plugin(const PairAggregates& agg) {
  require_balanced(agg, "var_y12_plugin");
  const int g = agg.g();
  if (g < 2) throw PreconditionError("var_y12_plugin requires at least two identities");
  return to_double(var_y12_dd(agg, far_mean_dd(agg)));
}

double cov_y12_y13_plugin(const PairAggregates& agg) {
  require_balanced(agg, "cov_y12_y13_plugin");
  const int g = agg.g();
  if (g < 3) throw PreconditionError("cov_y12_y13_plugin requires at least three identities");
  return to_double(cov_y12_y13_dd(agg, far_mean_dd(agg)));
}

VarianceEstimate var_far_plugin(const PairAggregates& agg) {
  require_balanced(agg, "var_far_plugin");
  const int g = agg.g();
  if (g < 3) throw PreconditionError("var_far_plugin requires at least three identities");
  const DD far = far_mean_dd(agg);
  const DD v = var_y12_dd(agg, far);
  const DD c = cov_y12_y13_dd(agg, far);
  const DD raw = dd_add(dd_div(dd_scale2(v), g - 1.0),
                        dd_mul(dd_div({4.0 * (g - 2), 0.0}, g - 1.0), c));
  return clamp(Metric::far, to_double(raw), "plugin", to_double(v), to_double(c));
}

VarianceEstimate var_far_jackknife(const PairAggregates& agg) {
  require_balanced(agg, "var_far_jackknife");
  const int g = agg.g();
  if (g < 3) throw PreconditionError("var_far_jackknife requires at least three identities");
  DD total{};  // ordered off-diagonal sum
  for (int i = 0; i < g; ++i)
    for (int j = i + 1; j < g; ++j) total = dd_add(total, dd_scale2({agg.y_bar(i, j), 0.0}));
  const DD far = dd_div(total, static_cast<double>(g) * (g - 1));
  DD sum_sq{};
  for (int i = 0; i < g; ++i) {
    DD row{};
    for (int j = 0; j < g; ++j)
      if (j != i) row = dd_add(row, {agg.y_bar(i, j), 0.0});
    const DD loo =
        dd_div(dd_sub(total, dd_scale2(row)), static_cast<double>(g - 1) * (g - 2));
    const DD dev = dd_sub(loo, far);
    sum_sq = dd_add(sum_sq, dd_mul(dev, dev));
  }
  const DD v = var_y12_dd(agg, far);
  const DD raw = dd_sub(dd_mul(dd_div({static_cast<double>(g - 2) * (g - 2), 0.0}, g), sum_sq),
                        dd_div(dd_scale2(v), g - 1.0));
  return clamp(Metric::far, to_double(raw), "jackknife", to_double(v), kNaN);
}

VarianceEstimate var_frr_unbalanced(const PairAggregates& agg, FrrVarianceMode mode) {
  const int g = agg.g();
  const double frr = estimate_frr_unbalanced(agg).value;
  if (mode == FrrVarianceMode::delta_independent) {
    double num = 0.0, em = 0.0;
    for (int i = 0; i < g; ++i) {
      const double mt = agg.m_tilde(i);
      em += mt;
      if (mt > 0.0) num += mt * mt * (agg.y_bar(i, i) - frr) * (agg.y_bar(i, i) - frr);
    }
    num /= g;
    em /= g;
    return clamp(Metric::frr, num / (em * em), "delta_independent");
  }
  // Full delta expansion of the ratio sum(Mt Y) / sum(Mt), all moments as
  // identity-level sample means.
  double ex = 0.0, em = 0.0, exx = 0.0, exm = 0.0, emm = 0.0;
  for (int i = 0; i < g; ++i) {
    const double mt = agg.m_tilde(i);
    const double x = mt > 0.0 ? mt * agg.y_bar(i, i) : 0.0;
    ex += x;
    em += mt;
    exx += x * x;
    exm += x * mt;
    emm += mt * mt;
  }
  ex /= g;
  em /= g;
  exx /= g;
  exm /= g;
  emm /= g;
  if (em == 0.0)
    throw PreconditionError("FRR variance requires an identity with two instances");
  const double var_x = exx - ex * ex;
  const double cov_xm = exm - ex * em;
  const double var_m = emm - em * em;
  const double raw = var_x / (em * em) - 2.0 * ex * cov_xm / (em * em * em) +
                     ex * ex * var_m / (em * em * em * em);
  return clamp(Metric::frr, raw, "delta_full");
}

VarianceEstimate var_far_unbalanced(const PairAggregates& agg) {
  const int g = agg.g();
  if (g < 3) throw PreconditionError("var_far_unbalanced requires at least three identities");
  const double far = estimate_far_unbalanced(agg).value;
  const double em = agg.m.mean();
  const double em4 = em * em * em * em;

  // E_n[M1^2 M2^2 (Y12 - FAR)^2] over distinct ordered pairs.
  double pair_mom = 0.0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      if (j == i) continue;
      const double d = agg.y_bar(i, j) - far;
      pair_mom += agg.m(i) * agg.m(i) * agg.m(j) * agg.m(j) * d * d;
    }
  pair_mom /= static_cast<double>(g) * (g - 1);

  // E_n[M1^2 M2 M3 (Y12 Y13 - FAR^2)] over distinct ordered triples, with the
  // product centered so that equal instance counts reproduce the balanced
  // covariance plug-in exactly.
  double triple_mom = 0.0;
  for (int i = 0; i < g; ++i) {
    double rw = 0.0, qw = 0.0, rm = 0.0, qm = 0.0;
    for (int j = 0; j < g; ++j) {
      if (j == i) continue;
      const double w = agg.m(j) * agg.y_bar(i, j);
      rw += w;
      qw += w * w;
      rm += agg.m(j);
      qm += agg.m(j) * agg.m(j);
    }
    const double prod_sum = rw * rw - qw;       // sum over j != k of Mj Mk Yij Yik
    const double const_sum = rm * rm - qm;      // sum over j != k of Mj Mk
    triple_mom += agg.m(i) * agg.m(i) * (prod_sum - far * far * const_sum);
  }
  triple_mom /= static_cast<double>(g) * (g - 1) * (g - 2);

  const double term1 = pair_mom / em4;
  const double term2 = triple_mom / em4;
  const double raw = 2.0 / (g - 1) * term1 + 4.0 * (g - 2) / (g - 1) * term2;
  return clamp(Metric::far, raw, "delta_full", term1, term2);
}

VarianceEstimate variance_for(Metric metric, const PairAggregates& agg,
                              FrrVarianceMode frr_mode) {
  if (metric == Metric::frr)
    return agg.balanced ? var_frr_plugin(agg) : var_frr_unbalanced(agg, frr_mode);
  return agg.balanced ? var_far_plugin(agg) : var_far_unbalanced(agg);
}

}  // namespace matchci
