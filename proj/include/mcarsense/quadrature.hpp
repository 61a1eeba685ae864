#pragma once

#include <functional>

namespace mcarsense {

struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_subdivisions = 2000;

  /// Throws ParameterError unless tolerances are positive and max_subdivisions >= 1.
  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int subdivisions = 0;
};

using Integrand = std::function<double(double)>;

/// Integral over [lower, upper] by globally adaptive Gauss-Kronrod (21-point)
/// bisection: the panel with the largest error estimate is split until the
/// summed estimate meets max(abs_tol, rel_tol * |value|).
///
/// Throws AccuracyError (carrying the best estimate and its error bound) when
/// the budget of subdivisions runs out first.
QuadratureResult integrate_interval(const Integrand& f, double lower, double upper,
                                    const QuadratureSpec& spec = {});

/// Integral over [0, inf) after the substitution t = u / (1 - u).
QuadratureResult integrate_semiline(const Integrand& f, const QuadratureSpec& spec = {});

}  // namespace mcarsense
