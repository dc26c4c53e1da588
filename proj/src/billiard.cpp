#include "revflow/billiard.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace revflow {

namespace {

// Same Hamiltonian right-hand side as the geodesic module; duplicated here so
// the arc integrator stays private to each translation unit.
struct ArcRhs {
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

using ArcIntegrator = Dopri5<ArcRhs>;

struct PendingImpact {
    double t;
    State4 y;     // state just past the wall
    double wall;  // 0 or pi
};

}  // namespace

BilliardTrajectory billiard_flow(const HalfSurface& half, const PhasePoint& start,
                                 double t_end, const BilliardOptions& options) {
    const Surface& surface = half.base;
    if (!(start.phi > HalfSurface::wall_low && start.phi < HalfSurface::wall_high))
        throw std::invalid_argument("billiard start must be interior: phi in (0, pi)");
    if (std::abs(start.theta) > surface.theta_max())
        throw std::invalid_argument("start lies outside the dynamical domain");

    BilliardTrajectory bt;
    Trajectory& traj = bt.path;
    traj.t_end = t_end;
    traj.times.push_back(0.0);
    traj.states.push_back(start);
    bt.arc_of_sample.push_back(0);
    if (t_end == 0.0) return bt;

    const double dir = (t_end > 0.0) ? 1.0 : -1.0;
    std::vector<double> stops = options.flow.sample_times;
    for (double s : stops) {
        if (s * dir < 0.0 || std::abs(s) > std::abs(t_end))
            throw std::invalid_argument("sample time outside [0, t_end]");
    }
    stops.push_back(t_end);
    std::sort(stops.begin(), stops.end(),
              [dir](double a, double b) { return a * dir < b * dir; });
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    const double step_tol = std::max(1e-14, options.flow.tol * options.flow.step_safety);
    ArcIntegrator integ(ArcRhs{&surface}, step_tol, step_tol, 0.25,
                        options.flow.max_steps);
    ArcIntegrator event_integ = integ;

    const double h0 = hamiltonian(surface, start);
    const double theta_max = surface.theta_max();

    double t = 0.0;
    State4 y = start.to_state();
    int arc = 0;
    bool halted = false;

    auto monitor = [&](const PhasePoint& p) {
        traj.max_energy_drift =
            std::max(traj.max_energy_drift, std::abs(hamiltonian(surface, p) - h0));
        traj.max_clairaut_drift = std::max(
            traj.max_clairaut_drift, std::abs(std::abs(p.p_phi) - std::abs(start.p_phi)));
    };

    std::optional<PendingImpact> pending;

    auto on_step = [&](double t0, const State4& y0, double t1, State4& y1) {
        bool keep_going = true;
        std::vector<TrajectoryEvent> found;

        auto locate = [&](auto g, EventKind kind) {
            const double g0 = g(y0);
            const double g1 = g(y1);
            if (g0 == 0.0) return;
            if (!((g0 > 0.0) != (g1 > 0.0) || g1 == 0.0)) return;
            auto [te, ye] =
                bisect_crossing(event_integ, t0, y0, t1, g, options.flow.event_time_tol);
            TrajectoryEvent ev;
            ev.kind = kind;
            ev.t = te;
            ev.state = PhasePoint::from_state(ye);
            ev.direction = (ev.state.p_theta >= 0.0) ? 1 : -1;
            ev.arc_index = arc;
            found.push_back(ev);
        };

        if (options.flow.locate_events) {
            locate([](const State4& s) { return s[2]; }, EventKind::TurningPoint);
            locate([](const State4& s) { return s[0]; }, EventKind::EquatorCrossing);
        }

        double cutoff_t = t1;

        if (std::abs(y1[0]) >= theta_max) {
            auto g_exit = [theta_max](const State4& s) {
                return theta_max - std::abs(s[0]);
            };
            auto [te, ye] = bisect_crossing(event_integ, t0, y0, t1, g_exit,
                                            options.flow.event_time_tol);
            TrajectoryEvent ev;
            ev.kind = EventKind::DomainExit;
            ev.t = te;
            ev.state = PhasePoint::from_state(ye);
            ev.arc_index = arc;
            found.push_back(ev);
            traj.domain_exit = true;
            cutoff_t = te;
            keep_going = false;
        }

        // Wall impact: phi is monotone along an arc, toward the wall picked
        // by the sign of p_phi combined with the time direction.
        const double p_phi_arc = y0[3];
        if (p_phi_arc != 0.0) {
            const double wall = p_phi_arc * dir > 0.0 ? HalfSurface::wall_high
                                                      : HalfSurface::wall_low;
            auto g_wall = [wall](const State4& s) { return s[1] - wall; };
            const double g0 = g_wall(y0);
            const double g1 = g_wall(y1);
            if (g0 != 0.0 && ((g0 > 0.0) != (g1 > 0.0) || g1 == 0.0)) {
                auto [te, ye] = bisect_crossing(event_integ, t0, y0, t1, g_wall,
                                                options.flow.event_time_tol);
                if (te * dir < cutoff_t * dir) {
                    // Impact precedes any domain exit found above.
                    if (traj.domain_exit) {
                        traj.domain_exit = false;
                        found.erase(std::remove_if(found.begin(), found.end(),
                                                   [](const TrajectoryEvent& e) {
                                                       return e.kind == EventKind::DomainExit;
                                                   }),
                                    found.end());
                    }
                    pending = PendingImpact{te, ye, wall};
                    cutoff_t = te;
                    keep_going = false;
                }
            }
        }

        std::sort(found.begin(), found.end(),
                  [dir](const TrajectoryEvent& a, const TrajectoryEvent& b) {
                      return a.t * dir < b.t * dir;
                  });
        for (const TrajectoryEvent& ev : found) {
            if (ev.t * dir > cutoff_t * dir) break;
            traj.events.push_back(ev);
            monitor(ev.state);
        }

        if (keep_going) {
            if (options.flow.project_energy) {
                const double h_cur =
                    hamiltonian(surface, PhasePoint::from_state(y1));
                if (h_cur > 0.0) {
                    y1[2] *= h0 / h_cur;
                    y1[3] *= h0 / h_cur;
                }
            }
            const PhasePoint p1 = PhasePoint::from_state(y1);
            monitor(p1);
            if (options.flow.record_steps) {
                traj.times.push_back(t1);
                traj.states.push_back(p1);
                bt.arc_of_sample.push_back(arc);
            }
        }
        return keep_going;
    };

    for (double stop : stops) {
        if (halted) break;
        if (stop == 0.0) continue;

        while (t * dir < stop * dir && !halted) {
            pending.reset();
            integ.advance(t, y, stop, on_step);

            if (traj.domain_exit) {
                const TrajectoryEvent& ev = traj.events.back();
                traj.times.push_back(ev.t);
                traj.states.push_back(ev.state);
                bt.arc_of_sample.push_back(arc);
                traj.t_end = ev.t;
                halted = true;
                break;
            }

            if (pending) {
                PhasePoint impact = PhasePoint::from_state(pending->y);
                impact.phi = pending->wall;  // snap onto the wall

                if (std::abs(impact.p_phi) < options.grazing_floor) {
                    TrajectoryEvent ev;
                    ev.kind = EventKind::GrazingImpact;
                    ev.t = pending->t;
                    ev.state = impact;
                    ev.arc_index = arc;
                    traj.events.push_back(ev);
                    traj.times.push_back(pending->t);
                    traj.states.push_back(impact);
                    bt.arc_of_sample.push_back(arc);
                    traj.t_end = pending->t;
                    bt.grazing = true;
                    halted = true;
                    break;
                }
                if (bt.reflection_count >= options.max_reflections) {
                    bt.reflection_cap_hit = true;
                    traj.t_end = pending->t;
                    halted = true;
                    break;
                }

                TrajectoryEvent ev;
                ev.kind = EventKind::Reflection;
                ev.t = pending->t;
                ev.state = impact;  // pre-impact state on the wall
                ev.direction = (impact.p_theta >= 0.0) ? 1 : -1;
                ev.arc_index = arc;
                traj.events.push_back(ev);
                monitor(impact);

                PhasePoint reflected = impact;
                reflected.p_phi = -impact.p_phi;

                ReflectionCheck check;
                check.t = pending->t;
                check.wall = pending->wall;
                check.h_pre = hamiltonian(surface, impact);
                check.h_post = hamiltonian(surface, reflected);
                check.p_phi_pre = impact.p_phi;
                check.p_phi_post = reflected.p_phi;
                check.tangential_unchanged = (reflected.theta == impact.theta) &&
                                             (reflected.p_theta == impact.p_theta);
                // Re-enters: the phi motion after the flip points into the
                // domain along the direction of integration.
                const double phi_motion =
                    dir * reflected.p_phi / Surface::metric_g(reflected.theta);
                check.reenters = (pending->wall == HalfSurface::wall_high)
                                     ? (phi_motion < 0.0)
                                     : (phi_motion > 0.0);
                check.transversal = std::abs(impact.p_phi) >= options.grazing_floor;
                bt.checks.push_back(check);
                ++bt.reflection_count;

                t = pending->t;
                y = reflected.to_state();
                ++arc;
                continue;
            }
            break;  // reached the stop
        }

        if (!halted && (traj.times.empty() || traj.times.back() != stop)) {
            traj.times.push_back(stop);
            traj.states.push_back(PhasePoint::from_state(y));
            bt.arc_of_sample.push_back(arc);
        }
    }
    return bt;
}

PhasePoint billiard_final(const HalfSurface& half, const PhasePoint& start,
                          double t_end, double tol, const BilliardOptions& options) {
    BilliardOptions opt = options;
    opt.flow.tol = tol;
    opt.flow.record_steps = false;
    opt.flow.locate_events = false;
    opt.flow.sample_times.clear();
    BilliardTrajectory bt = billiard_flow(half, start, t_end, opt);
    if (bt.grazing) throw std::runtime_error("billiard trajectory grazed the wall");
    if (bt.path.domain_exit)
        throw std::runtime_error("billiard trajectory left the dynamical domain");
    return bt.path.states.back();
}

Trajectory unfold(const HalfSurface& half, const BilliardTrajectory& bt) {
    (void)half;
    if (bt.grazing) throw std::invalid_argument("cannot unfold a grazing trajectory");

    // Per-arc transform phi_geo = sigma_k * phi + c_k, p_phi_geo = sigma_k * p_phi.
    std::vector<TrajectoryEvent> reflections = bt.path.events_of(EventKind::Reflection);
    std::vector<double> sigma{1.0};
    std::vector<double> shift{0.0};
    for (const TrajectoryEvent& r : reflections) {
        const double wall =
            std::abs(r.state.phi - HalfSurface::wall_high) < 0.5 ? HalfSurface::wall_high
                                                                 : HalfSurface::wall_low;
        sigma.push_back(-sigma.back());
        shift.push_back(shift[shift.size() - 1] + 2.0 * sigma[sigma.size() - 2] * wall);
    }

    auto map_state = [&](const PhasePoint& p, int arc) {
        PhasePoint out = p;
        out.phi = sigma[arc] * p.phi + shift[arc];
        out.p_phi = sigma[arc] * p.p_phi;
        return out;
    };

    Trajectory out;
    out.t_end = bt.path.t_end;
    out.max_energy_drift = bt.path.max_energy_drift;
    out.max_clairaut_drift = bt.path.max_clairaut_drift;
    out.domain_exit = bt.path.domain_exit;
    out.times = bt.path.times;
    out.states.reserve(bt.path.states.size());
    for (std::size_t i = 0; i < bt.path.states.size(); ++i)
        out.states.push_back(map_state(bt.path.states[i], bt.arc_of_sample[i]));

    for (const TrajectoryEvent& ev : bt.path.events) {
        if (ev.kind == EventKind::Reflection || ev.kind == EventKind::GrazingImpact)
            continue;
        TrajectoryEvent mapped = ev;
        mapped.state = map_state(ev.state, ev.arc_index);
        mapped.arc_index = 0;
        out.events.push_back(mapped);
    }
    return out;
}

namespace {

// Golden-section minimization of a unimodal function on [a, b].
template <typename F>
double golden_min(const F& f, double a, double b, double x_tol) {
    const double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > x_tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

double h_adapted(const AdaptedMetric& m, double xi_p, double xi_d) {
    const double det = m.g11 * m.g22 - m.g12 * m.g12;
    const double q = m.g22 * xi_p * xi_p - 2.0 * m.g12 * xi_p * xi_d +
                     m.g11 * xi_d * xi_d;
    return std::sqrt(q / det);
}

double h_xi_d(const AdaptedMetric& m, double xi_p, double xi_d) {
    const double det = m.g11 * m.g22 - m.g12 * m.g12;
    return (m.g11 * xi_d - m.g12 * xi_p) / (det * h_adapted(m, xi_p, xi_d));
}

double h_xi_p(const AdaptedMetric& m, double xi_p, double xi_d) {
    const double det = m.g11 * m.g22 - m.g12 * m.g12;
    return (m.g22 * xi_p - m.g12 * xi_d) / (det * h_adapted(m, xi_p, xi_d));
}

double h_xi_d_xi_d(const AdaptedMetric& m, double xi_p, double xi_d) {
    const double det = m.g11 * m.g22 - m.g12 * m.g12;
    const double h = h_adapted(m, xi_p, xi_d);
    const double num = m.g11 * xi_d - m.g12 * xi_p;
    return m.g11 / (det * h) - num * num / (det * det * h * h * h);
}

double h_xi_d_xi_p(const AdaptedMetric& m, double xi_p, double xi_d) {
    const double det = m.g11 * m.g22 - m.g12 * m.g12;
    const double h = h_adapted(m, xi_p, xi_d);
    const double nd = m.g11 * xi_d - m.g12 * xi_p;
    const double np = m.g22 * xi_p - m.g12 * xi_d;
    return -m.g12 / (det * h) - nd * np / (det * det * h * h * h);
}

}  // namespace

CurvatureResult curvature_from_adapted_metric(
    const std::function<AdaptedMetric(double, double)>& metric, double x_prime,
    double xi_prime, double fd_step) {
    if (xi_prime == 0.0)
        throw std::invalid_argument("curvature needs a nonzero tangential covector");
    if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be positive");

    const AdaptedMetric m0 = metric(x_prime, 0.0);

    // Fiber minimum of h(x', 0, xi', .) over the conormal component.
    const double radius = 1.0 + 2.0 * std::abs(xi_prime);
    auto h_of_xid = [&](double xd) { return h_adapted(m0, xi_prime, xd); };
    const double xi_d_star = golden_min(h_of_xid, -radius, radius, 1e-12 * radius);
    if (std::abs(xi_d_star) > 0.95 * radius)
        throw std::runtime_error("conormal minimization failed (minimum at window edge)");

    CurvatureResult res;
    res.xi_d_star = xi_d_star;
    res.h_min = h_adapted(m0, xi_prime, xi_d_star);
    res.h_xi_d_xi_d = h_xi_d_xi_d(m0, xi_prime, xi_d_star);

    // Richardson-refined central differences over the base variables; the
    // xi-derivatives of h come analytically from the metric.
    auto base_derivs = [&](double step) {
        const AdaptedMetric mp = metric(x_prime + step, 0.0);
        const AdaptedMetric mm = metric(x_prime - step, 0.0);
        const AdaptedMetric md_p = metric(x_prime, step);
        const AdaptedMetric md_m = metric(x_prime, -step);
        struct Out {
            double h_xp, h_xd;        // dh/dx', dh/dx_d
            double hxid_xp, hxid_xd;  // d(h_{xi_d})/dx', d(h_{xi_d})/dx_d
        } o;
        o.h_xp = (h_adapted(mp, xi_prime, xi_d_star) -
                  h_adapted(mm, xi_prime, xi_d_star)) / (2.0 * step);
        o.h_xd = (h_adapted(md_p, xi_prime, xi_d_star) -
                  h_adapted(md_m, xi_prime, xi_d_star)) / (2.0 * step);
        o.hxid_xp = (h_xi_d(mp, xi_prime, xi_d_star) -
                     h_xi_d(mm, xi_prime, xi_d_star)) / (2.0 * step);
        o.hxid_xd = (h_xi_d(md_p, xi_prime, xi_d_star) -
                     h_xi_d(md_m, xi_prime, xi_d_star)) / (2.0 * step);
        return o;
    };

    const auto d1 = base_derivs(fd_step);
    const auto d2 = base_derivs(0.5 * fd_step);
    const double h_xp = (4.0 * d2.h_xp - d1.h_xp) / 3.0;
    const double h_xd = (4.0 * d2.h_xd - d1.h_xd) / 3.0;
    const double hxid_xp = (4.0 * d2.hxid_xp - d1.hxid_xp) / 3.0;
    const double hxid_xd = (4.0 * d2.hxid_xd - d1.hxid_xd) / 3.0;

    const double hd_xi = h_xi_d(m0, xi_prime, xi_d_star);
    const double hp_xi = h_xi_p(m0, xi_prime, xi_d_star);
    const double hdd = res.h_xi_d_xi_d;
    const double hdp = h_xi_d_xi_p(m0, xi_prime, xi_d_star);

    // {h_{xi_d}, h} = sum_j dF/dxi_j dG/dx_j - dF/dx_j dG/dxi_j with F = h_{xi_d}.
    res.kappa = hdp * h_xp + hdd * h_xd - hxid_xp * hp_xi - hxid_xd * hd_xi;
    return res;
}

CurvatureResult hamiltonian_curvature(const HalfSurface& half, double theta,
                                      double xi_prime, double fd_step, double wall) {
    const Surface& surface = half.base;
    if (std::abs(theta) > surface.theta_max())
        throw std::invalid_argument("boundary point outside the dynamical domain");
    const bool low_wall = std::abs(wall - HalfSurface::wall_low) < 1e-9;
    if (!low_wall && std::abs(wall - HalfSurface::wall_high) > 1e-9)
        throw std::invalid_argument("wall must be 0 or pi");
    const double inward = low_wall ? 1.0 : -1.0;

    const double mini_tol = 1e-13;
    ArcIntegrator integ(ArcRhs{&surface}, mini_tol, mini_tol, 0.25, 1'000'000);
    const double jac_step = 1e-4;

    // Endpoint of the unit-speed inward normal geodesic from (x', wall).
    auto shoot = [&](double x_prime, double dist) {
        State4 y = {x_prime, wall, 0.0,
                    inward * std::sqrt(Surface::metric_g(x_prime))};
        double t = 0.0;
        integ.advance(t, y, dist);
        return y;
    };

    auto metric = [&](double x_prime, double x_d) {
        AdaptedMetric m;
        if (x_d == 0.0) {
            m.g11 = surface.metric_e(x_prime);
            m.g12 = 0.0;
            m.g22 = 1.0;
            return m;
        }
        const State4 yc = shoot(x_prime, x_d);
        const State4 yp = shoot(x_prime + jac_step, x_d);
        const State4 ym = shoot(x_prime - jac_step, x_d);
        const double theta_e = yc[0];
        const double e = surface.metric_e(theta_e);
        const double g = Surface::metric_g(theta_e);
        // Coordinate basis vectors of the adapted chart at the endpoint.
        const double v1_theta = (yp[0] - ym[0]) / (2.0 * jac_step);
        const double v1_phi = (yp[1] - ym[1]) / (2.0 * jac_step);
        const double v2_theta = yc[2] / e;
        const double v2_phi = yc[3] / g;
        m.g11 = e * v1_theta * v1_theta + g * v1_phi * v1_phi;
        m.g12 = e * v1_theta * v2_theta + g * v1_phi * v2_phi;
        m.g22 = e * v2_theta * v2_theta + g * v2_phi * v2_phi;
        return m;
    };

    return curvature_from_adapted_metric(metric, theta, xi_prime, fd_step);
}

}  // namespace revflow
