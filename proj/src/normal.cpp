#include "matchci/normal.hpp"

#include <cmath>
#include <limits>

#include "matchci/errors.hpp"

namespace matchci {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kSqrt1_2 = 0.7071067811865475244;
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kSqrt1_2); }

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double inverse_normal_cdf(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0)
    throw PreconditionError("inverse_normal_cdf: p must lie in [0,1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  if (p == 0.5) return 0.0;

  const bool upper = p > 0.5;
  const double q = upper ? 1.0 - p : p;  // q in (0, 0.5]

  // Coarse start (error < 3e-3), then Newton on Phi. Quadratic convergence
  // reaches machine-level accuracy in a handful of steps.
  const double t = std::sqrt(-2.0 * std::log(q));
  double x = -(t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t)));

  for (int i = 0; i < 60; ++i) {
    const double err = normal_cdf(x) - q;
    const double d = normal_pdf(x);
    if (d <= 0.0) break;  // deep tail past pdf underflow; keep the start value
    double dx = err / d;
    // Halley correction: one extra term of the Taylor inverse, nearly free.
    dx = dx / (1.0 + 0.5 * dx * x);
    x -= dx;
    if (std::abs(dx) <= 1e-13 * std::max(1.0, std::abs(x))) break;
  }
  return upper ? -x : x;
}

double two_sided_z(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw PreconditionError("two_sided_z: alpha must lie in (0,1)");
  return -inverse_normal_cdf(0.5 * alpha);
}

}  // namespace matchci
