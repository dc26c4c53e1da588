#include "revflow/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace revflow {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

}  // namespace

double hamiltonian(const Surface& surface, const PhasePoint& p) {
    const double e = surface.metric_e(p.theta);
    const double g = Surface::metric_g(p.theta);
    return std::sqrt(p.p_theta * p.p_theta / e + p.p_phi * p.p_phi / g);
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::TurningPoint: return "turning_point";
        case EventKind::EquatorCrossing: return "equator_crossing";
        case EventKind::DomainExit: return "domain_exit";
        case EventKind::Reflection: return "reflection";
        case EventKind::GrazingImpact: return "grazing_impact";
    }
    return "?";
}

std::vector<TrajectoryEvent> Trajectory::events_of(EventKind k) const {
    std::vector<TrajectoryEvent> out;
    for (const TrajectoryEvent& e : events)
        if (e.kind == k) out.push_back(e);
    return out;
}

PhasePoint equator_to_phase(const Surface& surface, const EquatorData& data) {
    if (!(data.alpha >= 0.0 && data.alpha < kPi / 2.0))
        throw std::invalid_argument("equator angle alpha must lie in [0, pi/2)");
    (void)surface;  // E(0) = G(0) = 1 for every valid profile
    PhasePoint p;
    p.theta = 0.0;
    p.phi = data.phi0;
    p.p_phi = std::cos(data.alpha);
    p.p_theta = (data.direction >= 0 ? 1.0 : -1.0) * std::sin(data.alpha);
    return p;
}

EquatorData phase_to_equator(const Surface& surface, const PhasePoint& p, double tol) {
    if (std::abs(p.theta) > tol)
        throw std::invalid_argument("phase point does not lie on the equator");
    const double h = hamiltonian(surface, p);
    if (std::abs(h - 1.0) > 1e-6)
        throw std::invalid_argument("phase point is not on the unit cosphere");
    EquatorData d;
    d.alpha = std::acos(std::clamp(std::abs(p.p_phi), 0.0, 1.0));
    d.phi0 = p.phi;
    d.direction = (p.p_theta >= 0.0) ? 1 : -1;
    return d;
}

namespace {

// Right-hand side of Hamilton's equations for H = (p_theta^2/E + p_phi^2/G)/2.
// On the level h = 1 the parameter is arc length.
struct GeodesicRhs {
    const Surface* surface;

    void operator()(const State4& y, State4& dy) const {
        const double theta = y[0];
        const double p_theta = y[2];
        const double p_phi = y[3];
        const double e = surface->metric_e(theta);
        const double ep = surface->metric_e_deriv(theta);
        const double g = Surface::metric_g(theta);
        const double gp = Surface::metric_g_deriv(theta);
        dy[0] = p_theta / e;
        dy[1] = p_phi / g;
        dy[2] = 0.5 * (p_theta * p_theta * ep / (e * e) + p_phi * p_phi * gp / (g * g));
        dy[3] = 0.0;
    }
};

using GeodesicIntegrator = Dopri5<GeodesicRhs>;

GeodesicIntegrator make_integrator(const Surface& surface, double tol,
                                   double step_safety, long max_steps) {
    const double step_tol = std::max(1e-14, tol * step_safety);
    return GeodesicIntegrator(GeodesicRhs{&surface}, step_tol, step_tol, 0.25,
                              max_steps);
}

}  // namespace

Trajectory flow(const Surface& surface, const PhasePoint& start, double t_end,
                const FlowOptions& options) {
    Trajectory traj;
    traj.t_end = t_end;
    traj.times.push_back(0.0);
    traj.states.push_back(start);

    if (std::abs(start.theta) > surface.theta_max())
        throw std::invalid_argument("start lies outside the dynamical domain");
    if (t_end == 0.0) return traj;

    const double dir = (t_end > 0.0) ? 1.0 : -1.0;
    std::vector<double> stops = options.sample_times;
    for (double s : stops) {
        if (s * dir < 0.0 || std::abs(s) > std::abs(t_end))
            throw std::invalid_argument("sample time outside [0, t_end]");
    }
    stops.push_back(t_end);
    std::sort(stops.begin(), stops.end(),
              [dir](double a, double b) { return a * dir < b * dir; });
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    auto integ = make_integrator(surface, options.tol, options.step_safety,
                                 options.max_steps);
    auto event_integ = make_integrator(surface, options.tol, options.step_safety,
                                       options.max_steps);

    const double h0 = hamiltonian(surface, start);
    const double p_phi0 = start.p_phi;
    const double theta_max = surface.theta_max();

    double t = 0.0;
    State4 y = start.to_state();
    bool halted = false;

    auto monitor = [&](const PhasePoint& p) {
        traj.max_energy_drift =
            std::max(traj.max_energy_drift, std::abs(hamiltonian(surface, p) - h0));
        traj.max_clairaut_drift =
            std::max(traj.max_clairaut_drift, std::abs(p.p_phi - p_phi0));
    };

    for (double stop : stops) {
        if (halted) break;
        if (stop == 0.0) continue;

        auto on_step = [&](double t0, const State4& y0, double t1, State4& y1) {
            bool keep_going = true;
            if (options.locate_events) {
                std::vector<TrajectoryEvent> found;

                auto locate = [&](auto g, EventKind kind) {
                    const double g0 = g(y0);
                    const double g1 = g(y1);
                    if (g0 == 0.0 || !((g0 > 0.0) != (g1 > 0.0) || g1 == 0.0)) return;
                    auto [te, ye] =
                        bisect_crossing(event_integ, t0, y0, t1, g, options.event_time_tol);
                    TrajectoryEvent ev;
                    ev.kind = kind;
                    ev.t = te;
                    ev.state = PhasePoint::from_state(ye);
                    ev.direction = (ev.state.p_theta >= 0.0) ? 1 : -1;
                    found.push_back(ev);
                };

                locate([](const State4& s) { return s[2]; }, EventKind::TurningPoint);
                locate([](const State4& s) { return s[0]; }, EventKind::EquatorCrossing);

                if (std::abs(y1[0]) >= theta_max) {
                    auto g_exit = [theta_max](const State4& s) {
                        return theta_max - std::abs(s[0]);
                    };
                    auto [te, ye] = bisect_crossing(event_integ, t0, y0, t1, g_exit,
                                                    options.event_time_tol);
                    TrajectoryEvent ev;
                    ev.kind = EventKind::DomainExit;
                    ev.t = te;
                    ev.state = PhasePoint::from_state(ye);
                    found.push_back(ev);
                    traj.domain_exit = true;
                    keep_going = false;
                }

                std::sort(found.begin(), found.end(),
                          [dir](const TrajectoryEvent& a, const TrajectoryEvent& b) {
                              return a.t * dir < b.t * dir;
                          });
                for (const TrajectoryEvent& ev : found) {
                    traj.events.push_back(ev);
                    monitor(ev.state);
                    if (ev.kind == EventKind::DomainExit) break;
                }
            } else if (std::abs(y1[0]) >= theta_max) {
                traj.domain_exit = true;
                keep_going = false;
            }

            if (keep_going) {
                if (options.project_energy) {
                    const double h_cur =
                        hamiltonian(surface, PhasePoint::from_state(y1));
                    if (h_cur > 0.0) {
                        y1[2] *= h0 / h_cur;
                        y1[3] *= h0 / h_cur;
                    }
                }
                const PhasePoint p1 = PhasePoint::from_state(y1);
                monitor(p1);
                if (options.record_steps) {
                    traj.times.push_back(t1);
                    traj.states.push_back(p1);
                }
            }
            return keep_going;
        };

        integ.advance(t, y, stop, on_step);

        if (traj.domain_exit) {
            // Truncate at the exit event if one was located.
            if (!traj.events.empty() && traj.events.back().kind == EventKind::DomainExit) {
                const TrajectoryEvent& ev = traj.events.back();
                traj.times.push_back(ev.t);
                traj.states.push_back(ev.state);
                traj.t_end = ev.t;
            }
            halted = true;
            break;
        }

        if (!options.record_steps || traj.times.back() != stop) {
            traj.times.push_back(stop);
            traj.states.push_back(PhasePoint::from_state(y));
        }
    }
    return traj;
}

PhasePoint flow_final(const Surface& surface, const PhasePoint& start,
                      double t_end, double tol, double step_safety) {
    if (t_end == 0.0) return start;
    auto integ = make_integrator(surface, tol, step_safety, 50'000'000);
    const double theta_max = surface.theta_max();
    double t = 0.0;
    State4 y = start.to_state();
    bool exited = false;
    integ.advance(t, y, t_end,
                  [&](double, const State4&, double, const State4& y1) {
                      if (std::abs(y1[0]) >= theta_max) {
                          exited = true;
                          return false;
                      }
                      return true;
                  });
    if (exited) throw std::runtime_error("trajectory left the dynamical domain");
    return PhasePoint::from_state(y);
}

double empirical_period(const Trajectory& traj) {
    const auto turns = traj.events_of(EventKind::TurningPoint);
    if (turns.size() >= 3) return std::abs(turns[2].t - turns[0].t);

    // Equator orbit: theta identically zero, p_theta identically zero.
    bool on_equator = true;
    for (const PhasePoint& p : traj.states) {
        if (std::abs(p.theta) > 1e-9 || std::abs(p.p_theta) > 1e-9) {
            on_equator = false;
            break;
        }
    }
    if (on_equator && !traj.states.empty() &&
        std::abs(traj.states.front().p_phi) > 1e-12) {
        return kTwoPi / std::abs(traj.states.front().p_phi);
    }

    // Fall back to two same-direction equator crossings.
    const auto crossings = traj.events_of(EventKind::EquatorCrossing);
    for (std::size_t i = 0; i < crossings.size(); ++i) {
        for (std::size_t j = i + 1; j < crossings.size(); ++j) {
            if (crossings[j].direction == crossings[i].direction)
                return std::abs(crossings[j].t - crossings[i].t);
        }
    }
    throw std::runtime_error(
        "empirical period needs three turning points or two same-direction "
        "equator crossings");
}

double empirical_rotation(const Trajectory& traj) {
    // Orientation convention phi_dot > 0: westward orbits report the
    // rotation of their eastward mirror image.
    const double orient =
        (traj.states.empty() || traj.states.front().p_phi >= 0.0) ? 1.0 : -1.0;

    const auto turns = traj.events_of(EventKind::TurningPoint);
    if (turns.size() >= 3) {
        const double dphi = turns[2].state.phi - turns[0].state.phi;
        return std::remainder(orient * dphi, kTwoPi);
    }
    const double period = empirical_period(traj);  // validates the event log
    // Equator orbit / crossing fallback: phi advances linearly in each case.
    const auto crossings = traj.events_of(EventKind::EquatorCrossing);
    for (std::size_t i = 0; i < crossings.size(); ++i) {
        for (std::size_t j = i + 1; j < crossings.size(); ++j) {
            if (crossings[j].direction == crossings[i].direction) {
                const double dphi = crossings[j].state.phi - crossings[i].state.phi;
                return std::remainder(orient * dphi, kTwoPi);
            }
        }
    }
    const double dphi = period * traj.states.front().p_phi;
    return std::remainder(orient * dphi, kTwoPi);
}

}  // namespace revflow
