#pragma once

#include <functional>

namespace revflow {

/// Result of an adaptive quadrature: value, error estimate, and whether the
/// requested tolerance was met before the subdivision budget ran out.
struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = false;
    int intervals = 0;
};

/// Adaptive Gauss-Kronrod 7-15 integration of fn over [a, b] to absolute
/// tolerance abs_tol. Bisects the interval with the worst error estimate
/// until the summed estimate drops below abs_tol or max_intervals is hit.
QuadResult integrate_adaptive(const std::function<double(double)>& fn,
                              double a, double b, double abs_tol,
                              int max_intervals = 2000);

/// As integrate_adaptive but throws std::runtime_error when the tolerance
/// is not reached, reporting the achieved error estimate.
double integrate_or_throw(const std::function<double(double)>& fn,
                          double a, double b, double abs_tol,
                          int max_intervals = 2000);

}  // namespace revflow
