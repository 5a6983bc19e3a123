#pragma once

namespace matchci {

double normal_cdf(double x);
double normal_pdf(double x);

// Phi^{-1}(p). Newton iteration against erfc, accurate to ~1e-13 absolute
// over the usable double range (far tighter than the 1e-9 contract).
double inverse_normal_cdf(double p);

// z_{1-alpha/2}, computed from the lower tail to avoid 1-alpha/2 rounding.
double two_sided_z(double alpha);

}  // namespace matchci
