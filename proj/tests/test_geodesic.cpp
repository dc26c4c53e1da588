#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "revflow/geodesic.hpp"
#include "revflow/surface.hpp"

using namespace revflow;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Closed-form great circle through the equator point (0, phi0) at angle
// alpha: the rotated equator. Returns the phase point at arc length t.
PhasePoint great_circle(double alpha, double phi0, int direction, double t) {
    const double s = direction >= 0 ? 1.0 : -1.0;
    const double sa = std::sin(alpha);
    const double st = std::sin(t);
    PhasePoint p;
    p.theta = std::asin(s * sa * st);
    p.phi = phi0 + std::atan2(std::cos(alpha) * st, std::cos(t));
    p.p_theta = s * sa * std::cos(t) / std::cos(p.theta);
    p.p_phi = std::cos(alpha);
    return p;
}

double wrapped_diff(double a, double b) { return std::remainder(a - b, kTwoPi); }

FlowOptions with_tol(double tol) {
    FlowOptions opt;
    opt.tol = tol;
    return opt;
}

// Deterministic pseudo-random stream for test start points.
struct TestRng {
    std::uint64_t state;
    double next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }
};

}  // namespace

TEST_CASE("sphere geodesics match the rotated-equator closed form") {
    const Surface sphere = build_surface(Profile::zero());
    TestRng rng{7};
    for (int trial = 0; trial < 5; ++trial) {
        const double alpha = 0.1 + 1.3 * rng.next();
        const double phi0 = kTwoPi * rng.next();
        const int dir = rng.next() < 0.5 ? 1 : -1;

        FlowOptions opt;
        opt.tol = 1e-10;
        opt.record_steps = false;
        for (int i = 1; i <= 128; ++i)
            opt.sample_times.push_back(kTwoPi * i / 128.0);
        const PhasePoint p0 = equator_to_phase(sphere, {alpha, phi0, dir});
        const Trajectory traj = flow(sphere, p0, kTwoPi, opt);

        double sup = 0.0;
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            const PhasePoint cf = great_circle(alpha, phi0, dir, traj.times[i]);
            const PhasePoint& got = traj.states[i];
            sup = std::max(sup, std::abs(got.theta - cf.theta));
            sup = std::max(sup, std::abs(wrapped_diff(got.phi, cf.phi)));
            sup = std::max(sup, std::abs(got.p_theta - cf.p_theta));
            sup = std::max(sup, std::abs(got.p_phi - cf.p_phi));
        }
        CHECK(sup <= 1e-8);
    }
}

TEST_CASE("equator orbit: phi advances linearly, theta stays zero") {
    const Surface sphere = build_surface(Profile::zero());
    const PhasePoint p0 = equator_to_phase(sphere, {0.0, 0.25, 1});
    CHECK(p0.p_phi == 1.0);
    CHECK(p0.p_theta == 0.0);

    FlowOptions opt;
    opt.tol = 1e-12;
    opt.record_steps = false;
    for (int i = 1; i <= 32; ++i) opt.sample_times.push_back(5.0 * i / 32.0);
    const Trajectory traj = flow(sphere, p0, 5.0, opt);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        CHECK(std::abs(traj.states[i].theta) < 1e-12);
        CHECK(std::abs(traj.states[i].phi - (0.25 + traj.times[i])) < 1e-10);
    }
    CHECK(empirical_period(traj) == doctest::Approx(kTwoPi).epsilon(1e-12));
    CHECK(std::abs(empirical_rotation(traj)) < 1e-12);
}

TEST_CASE("equator data conversions") {
    const Surface sphere = build_surface(Profile::zero());

    const PhasePoint p = equator_to_phase(sphere, {kPi / 3.0, 0.0, -1});
    CHECK(p.p_phi == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p.p_theta == doctest::Approx(-std::sqrt(3.0) / 2.0).epsilon(1e-15));
    CHECK(hamiltonian(sphere, p) == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(equator_to_phase(sphere, {kPi / 2.0, 0.0, 1}),
                    std::invalid_argument);

    TestRng rng{99};
    for (int i = 0; i < 100; ++i) {
        EquatorData d;
        d.alpha = 1.5 * rng.next();
        d.phi0 = kTwoPi * rng.next();
        d.direction = rng.next() < 0.5 ? 1 : -1;
        const EquatorData back = phase_to_equator(sphere, equator_to_phase(sphere, d));
        CHECK(back.alpha == doctest::Approx(d.alpha).epsilon(1e-12));
        CHECK(back.phi0 == d.phi0);
        if (d.alpha > 1e-9) CHECK(back.direction == d.direction);
    }
}

TEST_CASE("conservation and confinement on the bump surfaces") {
    const Surface surfaces[] = {
        build_surface(Profile::bump(0.5, 1.0, 0.1)),
        build_surface(Profile::odd_bump(0.25, 0.45, 0.1)),
    };
    TestRng rng{2024};
    for (const Surface& s : surfaces) {
        for (int trial = 0; trial < 4; ++trial) {
            const double alpha = 0.2 + 1.1 * rng.next();
            const PhasePoint p0 =
                equator_to_phase(s, {alpha, kTwoPi * rng.next(), 1});
            FlowOptions opt;
            opt.tol = 1e-10;
            const Trajectory traj = flow(s, p0, 50.0, opt);

            CHECK(traj.max_energy_drift <= 1e-8);
            CHECK(traj.max_clairaut_drift == 0.0);  // RHS for p_phi is exactly 0
            for (const PhasePoint& q : traj.states)
                CHECK(std::abs(q.theta) <= alpha + 1e-6);
        }
    }
}

TEST_CASE("turning points: symmetric thetas at |theta| = alpha") {
    const Surface s = build_surface(Profile::bump(0.5, 1.0, 0.1));
    const double alpha = 0.9;
    const PhasePoint p0 = equator_to_phase(s, {alpha, 0.0, 1});
    const Trajectory traj = flow(s, p0, 16.0, with_tol(1e-11));

    const auto turns = traj.events_of(EventKind::TurningPoint);
    REQUIRE(turns.size() >= 3);
    for (std::size_t i = 0; i + 1 < turns.size(); ++i) {
        CHECK(std::abs(turns[i].state.theta + turns[i + 1].state.theta) < 1e-6);
        CHECK(std::abs(std::abs(turns[i].state.theta) - alpha) < 1e-6);
    }
    // Turning events alternate with equator crossings in time.
    const auto crossings = traj.events_of(EventKind::EquatorCrossing);
    REQUIRE(crossings.size() >= 2);
    for (std::size_t i = 0; i + 1 < traj.events.size(); ++i)
        CHECK(traj.events[i].t < traj.events[i + 1].t);
}

TEST_CASE("reduced evolution identities hold along trajectories") {
    // Cross-checks of the scalar reduction: with cos(alpha) = p_phi(0),
    //   d(phi)/dt = cos(alpha) / cos^2(theta)
    //   (d(theta)/dt)^2 = (cos^2(theta) - cos^2(alpha)) / ((1+f)^2 cos^2(theta))
    // evaluated from the integrated momenta at every sample.
    const Surface s = build_surface(Profile::bump(0.5, 1.0, 0.1));
    for (double alpha : {0.4, 0.9, 1.2}) {
        const PhasePoint p0 = equator_to_phase(s, {alpha, 0.0, 1});
        FlowOptions opt;
        opt.tol = 1e-11;
        opt.record_steps = true;
        opt.locate_events = false;
        const Trajectory traj = flow(s, p0, 20.0, opt);
        const double ca = std::cos(alpha);
        for (const PhasePoint& q : traj.states) {
            const double c2 = std::cos(q.theta) * std::cos(q.theta);
            const double phi_dot = q.p_phi / c2;  // p_phi / G
            CHECK(std::abs(phi_dot - ca / c2) < 1e-9);

            const double e = s.metric_e(q.theta);
            const double theta_dot = q.p_theta / e;
            const double rhs = (c2 - ca * ca) / (e * c2);
            CHECK(std::abs(theta_dot * theta_dot - rhs) < 1e-8);
        }
    }
}

TEST_CASE("reversibility: forward then backward returns to the start") {
    const Surface s = build_surface(Profile::odd_bump(0.25, 0.45, 0.1));
    const PhasePoint p0 = equator_to_phase(s, {0.8, 1.0, 1});
    const PhasePoint mid = flow_final(s, p0, 20.0, 1e-12);
    const PhasePoint back = flow_final(s, mid, -20.0, 1e-12);
    CHECK(std::abs(back.theta - p0.theta) < 1e-7);
    CHECK(std::abs(back.phi - p0.phi) < 1e-7);
    CHECK(std::abs(back.p_theta - p0.p_theta) < 1e-7);
    CHECK(std::abs(back.p_phi - p0.p_phi) < 1e-7);
}

TEST_CASE("empirical period and rotation against known surfaces") {
    const Surface sphere = build_surface(Profile::zero());
    const Surface zoll = build_surface(Profile::odd_bump(0.25, 0.45, 0.1));

    for (double alpha : {0.4, 0.7, 1.1}) {
        const Trajectory t1 =
            flow(sphere, equator_to_phase(sphere, {alpha, 0.0, 1}), 16.0,
                 with_tol(1e-11));
        CHECK(std::abs(empirical_period(t1) - kTwoPi) < 1e-6);
        CHECK(std::abs(empirical_rotation(t1)) < 1e-6);
    }
    for (double alpha : {0.6, 1.0}) {
        const Trajectory t2 =
            flow(zoll, equator_to_phase(zoll, {alpha, 0.5, 1}), 16.0,
                 with_tol(1e-11));
        CHECK(std::abs(empirical_period(t2) - kTwoPi) < 1e-6);
        CHECK(std::abs(empirical_rotation(t2)) < 1e-6);
    }
}

TEST_CASE("rotation is orientation-normalized: mirror orbits agree") {
    const Surface s = build_surface(Profile::bump(0.5, 1.0, 0.1));
    const double alpha = 0.9;
    PhasePoint east = equator_to_phase(s, {alpha, 0.0, 1});
    PhasePoint west = east;
    west.p_phi = -east.p_phi;  // same orbit traversed westward

    FlowOptions opt = with_tol(1e-11);
    opt.record_steps = false;
    const double r_east = empirical_rotation(flow(s, east, 16.0, opt));
    const double r_west = empirical_rotation(flow(s, west, 16.0, opt));
    CHECK(r_east > 0.0);
    CHECK(std::abs(r_east - r_west) < 1e-8);
}

TEST_CASE("insufficient events raise an error") {
    const Surface sphere = build_surface(Profile::zero());
    const Trajectory traj =
        flow(sphere, equator_to_phase(sphere, {0.7, 0.0, 1}), 1.0, with_tol(1e-9));
    CHECK_THROWS_AS(empirical_period(traj), std::runtime_error);
}

TEST_CASE("near-meridian starts exit the domain and halt") {
    const Surface sphere = build_surface(Profile::zero());
    const PhasePoint p0 = equator_to_phase(sphere, {1.55, 0.0, 1});
    const Trajectory traj = flow(sphere, p0, 10.0, with_tol(1e-9));
    CHECK(traj.domain_exit);
    REQUIRE(!traj.events.empty());
    CHECK(traj.events.back().kind == EventKind::DomainExit);
    CHECK(std::abs(std::abs(traj.events.back().state.theta) - sphere.theta_max()) <
          1e-9);
    CHECK(traj.t_end < 10.0);
    CHECK_THROWS_AS(flow_final(sphere, p0, 10.0, 1e-9), std::runtime_error);
}

TEST_CASE("single-step convergence order of the stepper") {
    // One Dormand-Prince step against a tightly integrated reference: the
    // local error of the propagated solution must shrink like h^6.
    struct Rhs {
        const Surface* s;
        void operator()(const State4& y, State4& dy) const {
            const double e = s->metric_e(y[0]);
            const double ep = s->metric_e_deriv(y[0]);
            const double g = Surface::metric_g(y[0]);
            const double gp = Surface::metric_g_deriv(y[0]);
            dy[0] = y[2] / e;
            dy[1] = y[3] / g;
            dy[2] = 0.5 * (y[2] * y[2] * ep / (e * e) + y[3] * y[3] * gp / (g * g));
            dy[3] = 0.0;
        }
    };
    const Surface s = build_surface(Profile::bump(0.5, 1.0, 0.1));
    Dopri5<Rhs> fixed(Rhs{&s}, 1e30, 1e30, 10.0);  // error control disabled
    Dopri5<Rhs> tight(Rhs{&s}, 1e-14, 1e-14, 0.25);

    const State4 y0 = {0.7, 0.2, 0.35, 0.55};  // inside the bump region
    double prev_err = 0.0;
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
        const auto step = fixed.try_step(y0, h);
        double t = 0.0;
        State4 ref = y0;
        tight.advance(t, ref, h);
        double err = 0.0;
        for (int i = 0; i < 4; ++i) err = std::max(err, std::abs(step.y[i] - ref[i]));
        if (prev_err > 0.0) {
            const double ratio = prev_err / err;
            CHECK(ratio > 40.0);   // at least 5th order...
            CHECK(ratio < 130.0);  // ...and not a fluke of exact cancellation
        }
        prev_err = err;
    }
    CHECK(prev_err < 1e-10);
}

TEST_CASE("flow is deterministic: identical inputs give identical output") {
    const Surface s = build_surface(Profile::bump(0.5, 1.0, 0.1));
    const PhasePoint p0 = equator_to_phase(s, {0.9, 0.4, 1});
    FlowOptions opt;
    opt.tol = 1e-10;
    const Trajectory a = flow(s, p0, 30.0, opt);
    const Trajectory b = flow(s, p0, 30.0, opt);
    REQUIRE(a.times.size() == b.times.size());
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.times.size(); ++i) {
        CHECK(a.times[i] == b.times[i]);
        CHECK(a.states[i].theta == b.states[i].theta);
        CHECK(a.states[i].phi == b.states[i].phi);
        CHECK(a.states[i].p_theta == b.states[i].p_theta);
    }
    for (std::size_t i = 0; i < a.events.size(); ++i)
        CHECK(a.events[i].t == b.events[i].t);
}

TEST_CASE("optional energy projection pins h to the initial level") {
    const Surface s = build_surface(Profile::bump(0.5, 1.0, 0.1));
    const PhasePoint p0 = equator_to_phase(s, {1.0, 0.0, 1});
    FlowOptions opt;
    opt.tol = 1e-6;  // loose on purpose, so raw drift is visible
    opt.record_steps = true;
    opt.locate_events = false;

    const Trajectory raw = flow(s, p0, 100.0, opt);
    opt.project_energy = true;
    const Trajectory projected = flow(s, p0, 100.0, opt);

    CHECK(projected.max_energy_drift < 1e-13);
    CHECK(projected.max_energy_drift < raw.max_energy_drift);
    // Projection rescales p_phi, so exact conservation is traded away.
    CHECK(projected.max_clairaut_drift > 0.0);
    CHECK(projected.max_clairaut_drift < 1e-4);
}

TEST_CASE("flow rejects sample times outside the integration window") {
    const Surface sphere = build_surface(Profile::zero());
    FlowOptions opt;
    opt.sample_times = {5.0};
    CHECK_THROWS_AS(
        flow(sphere, equator_to_phase(sphere, {0.3, 0.0, 1}), 2.0, opt),
        std::invalid_argument);
}
