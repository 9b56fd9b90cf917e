#pragma once

namespace windemos::special {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Gamma family. All take a > 0 and throw DomainError otherwise.
double gamma_fn(double a);
/// Gamma(1 + a) - 1 without cancellation near a = 0; a > -1.
double gamma1pm1(double a);
/// Integral of t^(a-1) e^(-t) over [0, x]; x may be +inf.
double lower_inc_gamma(double a, double x);
/// Integral of t^(a-1) e^(-t) over [x, inf).
double upper_inc_gamma(double a, double x);

/// Exponential integral Ei(x), principal value. |x| < 1e-300 is a domain error.
double exp_integral_ei(double x);

double std_normal_pdf(double x);
double std_normal_cdf(double x);
/// Inverse of std_normal_cdf on ]0,1[.
double std_normal_quantile(double p);

}  // namespace windemos::special
