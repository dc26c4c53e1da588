#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "revflow/surface.hpp"

namespace revflow {

enum class OrbitClass { PeriodicResonant, NonResonantAtTolerance, EquatorBand };

const char* to_string(OrbitClass c);

/// Outcome of the resonance test on a rotation angle: the smallest k <= k_max
/// with k*R = 0 (mod 2*pi) within tolerance, found through the continued
/// fraction of R/(2*pi).
struct ResonanceResult {
    OrbitClass type = OrbitClass::NonResonantAtTolerance;
    std::int64_t p = 0;          ///< numerator of the convergent
    int q = 0;                   ///< denominator = resonance order k
    double fraction_error = 0.0; ///< |R/(2*pi) - p/q|
    double full_period = 0.0;    ///< q * T_star when resonant
};

/// Row of a period/rotation scan.
struct PeriodRecord {
    double alpha = 0.0;
    double t_star = 0.0;
    double rotation = 0.0;
    ResonanceResult resonance;
    std::string error;  ///< nonempty when this row failed

    bool ok() const { return error.empty(); }
};

/// Theta-oscillation period T(alpha) = 2*pi + 2 * integral of the even part
/// against the turning-point kernel. The endpoint singularity is removed by
/// the substitution sin(theta) = sin(alpha) sin(u), after which the integrand
/// is bounded and smooth; adaptive quadrature to abs tolerance tol.
double theta_period(const Surface& surface, double alpha, double tol = 1e-10);

/// Rotation angle R(alpha): phi advance beyond 2*pi per theta-period, via the
/// same substitution. Zero to the last bit for odd profiles.
double phi_rotation(const Surface& surface, double alpha, double tol = 1e-10);

/// Continued-fraction resonance test. Returns PeriodicResonant(q) when a
/// convergent p/q with q <= k_max satisfies |R/(2*pi) - p/q| <= tol/(2*pi*q)
/// (smallest such q wins); otherwise NonResonantAtTolerance. R = 0 within tol
/// classifies as PeriodicResonant(1).
ResonanceResult classify_resonance(double rotation, double t_star, int k_max,
                                   double tol = 1e-8);

/// One record per grid alpha; rows that throw carry the message in .error and
/// the scan continues. jobs > 1 splits the grid across threads; the output
/// order is the grid order either way.
std::vector<PeriodRecord> scan(const Surface& surface,
                               const std::vector<double>& alpha_grid,
                               double tol = 1e-10, int k_max = 20,
                               int jobs = 1);

/// Single-alpha convenience wrapper used by the CLI `classify` subcommand.
PeriodRecord classify_alpha(const Surface& surface, double alpha,
                            double tol = 1e-10, int k_max = 20);

}  // namespace revflow
