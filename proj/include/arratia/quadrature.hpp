#pragma once

#include <functional>
#include <initializer_list>
#include <span>

namespace arratia {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int intervals = 0;
  bool converged = false;
};

/// Globally adaptive Gauss-Kronrod (7/15) integration on [breakpoints.front(),
/// breakpoints.back()]. Breakpoints seed the initial subdivision, e.g. at
/// the scale where an integrand changes character. Stops once the summed
/// error estimate is below abs_tol.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, std::span<const double> breakpoints,
                                    double abs_tol = 1e-8, int max_intervals = 4000);

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, std::initializer_list<double> breakpoints,
                                    double abs_tol = 1e-8, int max_intervals = 4000);

}  // namespace arratia
