#pragma once

#include <vector>

#include "revflow/ode.hpp"
#include "revflow/surface.hpp"

namespace revflow {

/// Point of the cotangent phase space in (theta, phi, p_theta, p_phi)
/// coordinates. phi is kept unwrapped (continuous along a trajectory);
/// p_phi is the Clairaut invariant.
struct PhasePoint {
    double theta = 0.0;
    double phi = 0.0;
    double p_theta = 0.0;
    double p_phi = 0.0;

    State4 to_state() const { return {theta, phi, p_theta, p_phi}; }
    static PhasePoint from_state(const State4& s) { return {s[0], s[1], s[2], s[3]}; }
};

/// h(theta, p_theta, p_phi) = sqrt(p_theta^2 / E + p_phi^2 / G); equals 1 on
/// the unit cosphere, where trajectories are parametrized by arc length.
double hamiltonian(const Surface& surface, const PhasePoint& p);

enum class EventKind { TurningPoint, EquatorCrossing, DomainExit, Reflection, GrazingImpact };

const char* to_string(EventKind k);

struct TrajectoryEvent {
    EventKind kind;
    double t = 0.0;
    PhasePoint state;
    int direction = 0;  ///< sign of p_theta at an equator crossing
    int arc_index = 0;  ///< billiard arc containing the event
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PhasePoint> states;
    std::vector<TrajectoryEvent> events;
    double max_energy_drift = 0.0;    ///< max_t |h(t) - h(0)|
    double max_clairaut_drift = 0.0;  ///< max_t |p_phi(t) - p_phi(0)|
    bool domain_exit = false;
    double t_end = 0.0;

    std::vector<TrajectoryEvent> events_of(EventKind k) const;
};

/// Geodesic crossing the equator at angle alpha in [0, pi/2) with azimuth
/// phi0; direction is the sign of p_theta at the crossing.
struct EquatorData {
    double alpha = 0.0;
    double phi0 = 0.0;
    int direction = 1;
};

/// Unit-cosphere phase point of the equator crossing: theta = 0,
/// p_phi = cos(alpha), p_theta = direction * sin(alpha).
PhasePoint equator_to_phase(const Surface& surface, const EquatorData& data);

/// Inverse of equator_to_phase; requires |theta| below tol and unit h.
EquatorData phase_to_equator(const Surface& surface, const PhasePoint& p,
                             double tol = 1e-9);

struct FlowOptions {
    double tol = 1e-10;                ///< target accuracy of the trajectory
    std::vector<double> sample_times;  ///< extra sample points (monotone toward t_end)
    bool record_steps = true;          ///< record every accepted step
    bool locate_events = true;
    double event_time_tol = 1e-12;
    double step_safety = 0.02;  ///< per-step tolerance = tol * step_safety
    long max_steps = 50'000'000;
    /// Rescale the momenta back onto the initial energy level after every
    /// accepted step. Off by default: the unprojected drift is the error
    /// diagnostic.
    bool project_energy = false;
};

/// Integrates Hamilton's equations for H = h^2/2 from start over [0, t_end]
/// (t_end may be negative). Turning points (p_theta = 0) and equator
/// crossings (theta = 0) are located by sign-change bracketing plus bisection
/// to event_time_tol; reaching |theta| = theta_max records a DomainExit event
/// and halts.
Trajectory flow(const Surface& surface, const PhasePoint& start, double t_end,
                const FlowOptions& options = {});

/// Endpoint-only flow: no samples, no event location (domain exit still
/// throws std::runtime_error). Used by the displacement/jet inner loops.
PhasePoint flow_final(const Surface& surface, const PhasePoint& start,
                      double t_end, double tol, double step_safety = 0.02);

/// Theta-oscillation period estimated from the event log: t3 - t1 over the
/// first three turning points. Equator orbits (no turning points, theta == 0)
/// return 2*pi/|p_phi|. Throws std::runtime_error on insufficient events.
double empirical_period(const Trajectory& traj);

/// Rotation angle: phi advance over one theta-period minus 2*pi, reduced to
/// (-pi, pi].
double empirical_rotation(const Trajectory& traj);

}  // namespace revflow
