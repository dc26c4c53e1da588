#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "revflow/billiard.hpp"
#include "revflow/geodesic.hpp"
#include "revflow/period.hpp"
#include "revflow/surface.hpp"

namespace revflow {

/// Squared phase-space displacement after time T under the unit-speed
/// homogeneous flow:
///   |x(T) - x(0)|^2 + |xi(T) - xi(0)|^2
/// in the reduced chart (theta, phi mod 2pi, p_theta, p_phi). Points off the
/// unit cosphere are handled exactly through the degree-0/1 homogeneity of
/// the flow (normalize momenta, flow, scale back).
double displacement(const Surface& surface, const PhasePoint& p0, double T,
                    double tol = 1e-10);

/// Billiard version; throws on grazing.
double displacement(const HalfSurface& half, const PhasePoint& p0, double T,
                    double tol = 1e-10);

/// Finite-difference jet report of the displacement function over the reduced
/// transversal (theta, p_theta, p_phi). The phi direction is quotiented by
/// rotational symmetry and checked separately as an exact invariance.
struct JetReport {
    PhasePoint base;
    double period = 0.0;
    int order = 0;
    double fd_step = 0.0;
    double jet_tol = 0.0;
    std::vector<double> max_by_order;            ///< per total order 0..K
    std::vector<double> max_by_order_half_step;  ///< same at fd_step/2
    double phi_invariance_dev = 0.0;             ///< max |D(phi+c) - D(phi)|
    bool absolutely_periodic = false;            ///< all orders under jet_tol
    int first_nonvanishing_order = -1;
    double first_nonvanishing_magnitude = 0.0;
};

/// Throws std::invalid_argument for K > 4 and std::runtime_error when the two
/// step sizes disagree on the verdict (noise floor above signal).
JetReport jet_norms(const Surface& surface, const PhasePoint& p0, double T,
                    int order, double fd_step = 1e-3, double tol = 1e-10,
                    double jet_tol = 1e-6);

struct ReturnTime {
    double t_star = 0.0;
    double displacement_at_min = 0.0;
    std::array<double, 3> gradient{};  ///< d t*/d(theta, p_theta, p_phi)
    double gradient_norm = 0.0;
};

/// Locates the local minimum of t -> displacement(p0, t) inside
/// (t_guess - radius, t_guess + radius) by golden-section search and reports
/// the finite-difference gradient of t* over the reduced transversal. Throws
/// when the minimum sits on the window edge.
ReturnTime return_time(const Surface& surface, const PhasePoint& p0,
                       double t_guess, double radius, double tol = 1e-10,
                       double fd_step = 1e-3);

/// Samples the unit cosphere bundle with respect to the Liouville measure:
/// base density proportional to [1 + f(theta)] cos(theta) dtheta dphi
/// (rejection sampling), fiber direction uniform. Deterministic in seed and
/// independent of threading.
std::vector<PhasePoint> sample_liouville(const Surface& surface, int n,
                                         std::uint64_t seed);

struct WilsonInterval {
    double fraction = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

WilsonInterval wilson_interval(int count, int n, double z = 1.959963984540054);

struct MeasureReport {
    int n = 0;
    int n_periodic = 0;      ///< resonant at tolerance (includes the band)
    int n_nonperiodic = 0;
    int n_unresolved = 0;    ///< meridian-adjacent or failed samples
    int n_band = 0;          ///< alpha <= even-support infimum (finite)
    int n_t_periodic = 0;    ///< closes with period dividing T
    double T = 0.0;
    double tol = 0.0;
    int k_max = 0;
    std::uint64_t seed = 0;
    WilsonInterval periodic;
    WilsonInterval nonperiodic;
    WilsonInterval t_periodic;
    double band_fraction = 0.0;
};

/// Classifies n Liouville samples through the Clairaut reduction: the equator
/// angle alpha = arccos|p_phi| determines T(alpha), R(alpha), and the
/// resonance class. jobs > 1 parallelizes; output is independent of jobs.
MeasureReport estimate_measure(const Surface& surface, double T, int n,
                               double tol = 1e-8, int k_max = 20,
                               std::uint64_t seed = 1, int jobs = 1);

}  // namespace revflow
