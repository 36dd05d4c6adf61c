#pragma once

namespace heavytails::special {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2 pi)

/// Standard normal density and its log.
double norm_pdf(double x);
double norm_log_pdf(double x);

/// Standard normal upper tail P(Z > x). Underflows to 0 near x ~ 38.
double norm_tail(double x);

/// log P(Z > x), finite for all finite x (asymptotic expansion past the
/// erfc range). Relative agreement with log(norm_tail) is ~1e-13 wherever
/// the latter is representable.
double norm_log_tail(double x);

double norm_cdf(double x);

/// Inverse CDF. Acklam's rational initialization polished by Halley steps;
/// ~1 ulp over (1e-300, 1 - 1e-16).
double norm_quantile(double p);

/// Solve norm_log_tail(x) = log_q. Valid for arbitrarily deep tails
/// (log_q down to -1e300); Newton on the asymptotic expansion.
double norm_inv_log_tail(double log_q);

/// log Beta(a, b).
double log_beta(double a, double b);

/// Regularized incomplete beta I_z(a, b), both branches of the continued
/// fraction. Linear space; use log_beta_inc_lower for values that underflow.
double beta_inc_reg(double a, double b, double z);

/// log I_z(a, b) evaluated directly in log space. Requires z below the
/// continued-fraction crossover (a+1)/(a+b+2); that is the deep-tail regime.
double log_beta_inc_lower(double a, double b, double z);

}
