#pragma once

#include <functional>
#include <vector>

#include "revflow/geodesic.hpp"
#include "revflow/surface.hpp"

namespace revflow {

/// Half surface {q1 >= 0}, i.e. phi restricted to [0, pi]. The two boundary
/// meridians are geodesics of the base surface (fixed-point sets of the
/// reflection isometry phi -> -phi).
struct HalfSurface {
    Surface base;

    static constexpr double wall_low = 0.0;
    static constexpr double wall_high = 3.14159265358979323846;
};

/// Per-impact verification of the reflection law: energy preserved, position
/// and tangential momentum unchanged, conormal momentum negated, reflected
/// direction re-entering the domain, and transversal incidence.
struct ReflectionCheck {
    double t = 0.0;
    double wall = 0.0;
    double h_pre = 0.0;
    double h_post = 0.0;
    double p_phi_pre = 0.0;
    double p_phi_post = 0.0;
    bool tangential_unchanged = false;
    bool reenters = false;
    bool transversal = false;
};

struct BilliardTrajectory {
    Trajectory path;                   ///< samples with phi in [0, pi]
    std::vector<int> arc_of_sample;    ///< arc index per sample
    std::vector<ReflectionCheck> checks;
    int reflection_count = 0;
    bool grazing = false;
    bool reflection_cap_hit = false;
};

struct BilliardOptions {
    FlowOptions flow;
    int max_reflections = 1000000;
    double grazing_floor = 1e-6;  ///< |p_phi| below this at impact flags grazing
};

/// Billiard flow on the half surface: geodesic arcs joined by the momentum
/// flip p_phi -> -p_phi at the meridian walls. Impacts are located by event
/// bisection; grazing impacts (|p_phi| under the floor) halt the trajectory
/// with a GrazingImpact event rather than reflect.
BilliardTrajectory billiard_flow(const HalfSurface& half, const PhasePoint& start,
                                 double t_end, const BilliardOptions& options = {});

/// Endpoint-only billiard flow used by displacement evaluations.
PhasePoint billiard_final(const HalfSurface& half, const PhasePoint& start,
                          double t_end, double tol,
                          const BilliardOptions& options = {});

/// Mirrors alternate arcs across the walls (phi -> -phi plus a constant) and
/// re-accumulates phi continuously, producing a geodesic of the base surface
/// through the same start. Reflection events drop out; other events map 1:1.
Trajectory unfold(const HalfSurface& half, const BilliardTrajectory& bt);

/// 2x2 metric of boundary-adapted coordinates (x' along the boundary, x_d =
/// signed geodesic distance into the domain).
struct AdaptedMetric {
    double g11 = 0.0;
    double g12 = 0.0;
    double g22 = 0.0;
};

struct CurvatureResult {
    double kappa = 0.0;      ///< the Poisson bracket {h_{xi_d}, h} at the minimum
    double xi_d_star = 0.0;  ///< fiber minimum of h(x', 0, xi', .)
    double h_min = 0.0;
    double h_xi_d_xi_d = 0.0;  ///< strong-simple-reflection check value
};

/// Hamiltonian curvature of the boundary built from any adapted metric field
/// metric(x', x_d). The fiber minimum is found by golden-section search, the
/// xi-derivatives of h are taken analytically from the metric, and the base
/// derivatives by Richardson-refined central differences of step fd_step.
CurvatureResult curvature_from_adapted_metric(
    const std::function<AdaptedMetric(double, double)>& metric, double x_prime,
    double xi_prime, double fd_step);

/// Hamiltonian curvature of the half-surface boundary meridian at boundary
/// point theta with tangential covector component xi_prime. wall selects the
/// meridian (0 or pi). Expected to vanish: the meridians are geodesics.
CurvatureResult hamiltonian_curvature(const HalfSurface& half, double theta,
                                      double xi_prime, double fd_step = 1e-5,
                                      double wall = HalfSurface::wall_low);

}  // namespace revflow
