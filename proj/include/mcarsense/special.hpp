#pragma once

namespace mcarsense {

inline constexpr double kEulerGamma = 0.57721566490153286061;

/// Digamma function, x > 0.
double digamma(double x);

/// log Gamma(x), x > 0.
double log_gamma(double x);

/// Exponential integral E1(x) = int_x^inf e^-t / t dt, x > 0.
double exp_integral_e1(double x);

/// Solve E1(y) = value for y > 0 (value > 0). E1 is strictly decreasing.
double exp_integral_e1_inverse(double value);

/// log(1 + e^x) without overflow.
double softplus(double x);

/// 1 / (1 + e^x) without overflow.
double logistic_complement(double x);

}  // namespace mcarsense
