#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "revflow/analysis.hpp"
#include "revflow/quadrature.hpp"

using namespace revflow;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

const Surface& sphere() {
    static const Surface s = build_surface(Profile::zero());
    return s;
}
const Surface& bump() {
    static const Surface s = build_surface(Profile::bump(0.5, 1.0, 0.1));
    return s;
}
const Surface& zoll() {
    static const Surface s = build_surface(Profile::odd_bump(0.25, 0.45, 0.1));
    return s;
}

}  // namespace

TEST_CASE("displacement floor on globally periodic surfaces") {
    for (double alpha : {0.2, 0.9, 1.3}) {
        const PhasePoint p = equator_to_phase(sphere(), {alpha, 0.3, 1});
        CHECK(displacement(sphere(), p, kTwoPi, 1e-10) <= 1e-14);
    }
    // Band orbits of the bump surface are just as flat.
    const PhasePoint p = equator_to_phase(bump(), {0.3, 1.0, 1});
    CHECK(displacement(bump(), p, kTwoPi, 1e-10) <= 1e-14);
}

TEST_CASE("displacement detects the nonperiodic bump orbit at alpha = 0.8") {
    const PhasePoint p = equator_to_phase(bump(), {0.8, 0.3, 1});
    const double d = displacement(bump(), p, kTwoPi, 1e-10);
    // Frozen ODE oracle: T*(0.8) - 2pi = 0.0745 so D ~ 5.0e-3.
    CHECK(d >= 4e-3);
    CHECK(d <= 7e-3);
}

TEST_CASE("displacement respects the phi circle topology") {
    PhasePoint p = equator_to_phase(sphere(), {0.4, 0.0, 1});
    p.phi = kTwoPi * 3 + 0.25;  // same circle point as 0.25
    CHECK(displacement(sphere(), p, kTwoPi, 1e-10) <= 1e-14);
}

TEST_CASE("billiard displacement through reflections") {
    const HalfSurface half{bump()};
    PhasePoint p = equator_to_phase(bump(), {0.3, 0.0, 1});
    p.phi = 1.2;
    CHECK(displacement(half, p, kTwoPi, 1e-10) <= 1e-12);
}

TEST_CASE("jets vanish to order 3 on band and Zoll orbits") {
    for (const Surface* s : {&sphere(), &zoll()}) {
        const PhasePoint p = equator_to_phase(*s, {0.7, 0.1, 1});
        const JetReport rep = jet_norms(*s, p, kTwoPi, 3, 1e-3, 1e-10, 1e-6);
        CHECK(rep.absolutely_periodic);
        CHECK(rep.first_nonvanishing_order == -1);
        for (double v : rep.max_by_order) CHECK(v <= 1e-6);
        CHECK(rep.phi_invariance_dev <= 1e-12);
    }
    const PhasePoint p = equator_to_phase(bump(), {0.3, 0.9, 1});
    const JetReport rep = jet_norms(bump(), p, kTwoPi, 3, 1e-3, 1e-10, 1e-6);
    CHECK(rep.absolutely_periodic);
}

TEST_CASE("jets flag the displaced orbit at order zero") {
    const PhasePoint p = equator_to_phase(bump(), {0.8, 0.2, 1});
    const JetReport rep = jet_norms(bump(), p, kTwoPi, 2, 1e-3, 1e-10, 1e-6);
    CHECK(!rep.absolutely_periodic);
    CHECK(rep.first_nonvanishing_order == 0);
    CHECK(rep.first_nonvanishing_magnitude >= 4e-3);
    // Real signal: halving the step moves the norms by far less than 10x.
    for (int j = 0; j <= 2; ++j) {
        const double full = rep.max_by_order[static_cast<std::size_t>(j)];
        const double half = rep.max_by_order_half_step[static_cast<std::size_t>(j)];
        CHECK(half < 10.0 * full);
        CHECK(full < 10.0 * half);
    }
}

TEST_CASE("jet order is capped at 4") {
    const PhasePoint p = equator_to_phase(sphere(), {0.5, 0.0, 1});
    CHECK_THROWS_AS(jet_norms(sphere(), p, kTwoPi, 5), std::invalid_argument);
}

TEST_CASE("an unstable jet verdict under step halving is an error") {
    // With fd_step = 0.2 the stencil reaches across the band edge at the
    // full step but not at the half step, so the two verdicts disagree.
    const PhasePoint p = equator_to_phase(bump(), {0.45, 0.0, 1});
    CHECK_THROWS_AS(jet_norms(bump(), p, kTwoPi, 3, 0.2, 1e-10, 1e-6),
                    std::runtime_error);
}

TEST_CASE("return time: globally periodic surfaces pin t* = 2pi") {
    const PhasePoint p1 = equator_to_phase(sphere(), {0.5, 0.2, 1});
    const ReturnTime r1 = return_time(sphere(), p1, kTwoPi, 0.5, 1e-10);
    CHECK(std::abs(r1.t_star - kTwoPi) <= 1e-8);
    CHECK(r1.gradient_norm <= 1e-6);

    const PhasePoint p2 = equator_to_phase(zoll(), {0.8, 0.9, 1});
    const ReturnTime r2 = return_time(zoll(), p2, kTwoPi, 0.5, 1e-10);
    CHECK(std::abs(r2.t_star - kTwoPi) <= 1e-6);
    CHECK(r2.gradient_norm <= 1e-5);
}

TEST_CASE("return time of a nonperiodic point is only a closest approach") {
    const double t_guess = theta_period(bump(), 0.8, 1e-10);
    const PhasePoint p = equator_to_phase(bump(), {0.8, 0.0, 1});
    const ReturnTime r = return_time(bump(), p, t_guess, 0.5, 1e-10);
    CHECK(r.displacement_at_min > 1e-3);  // frozen oracle: ~5.0e-3
}

TEST_CASE("return time is degree-0 homogeneous in the covector") {
    PhasePoint p = equator_to_phase(zoll(), {0.6, 0.4, 1});
    const ReturnTime base = return_time(zoll(), p, kTwoPi, 0.4, 1e-10);
    p.p_theta *= 3.5;
    p.p_phi *= 3.5;
    const ReturnTime scaled = return_time(zoll(), p, kTwoPi, 0.4, 1e-10);
    CHECK(base.t_star == scaled.t_star);  // bit-identical by normalization
}

TEST_CASE("return time is constant along a band path") {
    // Smooth path inside the 2pi-periodic band of the bump surface.
    for (int i = 0; i <= 4; ++i) {
        const double s = i / 4.0;
        PhasePoint p = equator_to_phase(bump(), {0.15 + 0.3 * s, 0.7 * s, 1});
        const ReturnTime r = return_time(bump(), p, kTwoPi, 0.4, 1e-10);
        CHECK(std::abs(r.t_star - kTwoPi) <= 1e-6);
    }
}

TEST_CASE("return time without an interior minimum throws") {
    const PhasePoint p = equator_to_phase(sphere(), {0.5, 0.0, 1});
    CHECK_THROWS_AS(return_time(sphere(), p, 3.0, 0.5, 1e-10),
                    std::runtime_error);
}

TEST_CASE("liouville sampling: sphere moments and exact cosphere placement") {
    const auto pts = sample_liouville(sphere(), 100000, 42);
    double mean_cos = 0.0;
    for (const PhasePoint& p : pts) {
        mean_cos += std::cos(p.theta);
        CHECK(std::abs(hamiltonian(sphere(), p) - 1.0) <= 1e-14);
    }
    mean_cos /= static_cast<double>(pts.size());
    const double sigma = 0.2233 / std::sqrt(1e5);  // sd of cos under the density
    CHECK(std::abs(mean_cos - kPi / 4.0) <= 3.0 * sigma);
}

TEST_CASE("liouville sampling is deterministic in the seed") {
    const auto a = sample_liouville(bump(), 500, 9);
    const auto b = sample_liouville(bump(), 500, 9);
    const auto c = sample_liouville(bump(), 500, 10);
    REQUIRE(a.size() == b.size());
    bool all_equal = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        all_equal = all_equal && a[i].theta == b[i].theta && a[i].phi == b[i].phi &&
                    a[i].p_theta == b[i].p_theta && a[i].p_phi == b[i].p_phi;
    }
    CHECK(all_equal);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        any_diff = any_diff || a[i].theta != c[i].theta;
    CHECK(any_diff);
}

TEST_CASE("wilson interval basics") {
    const WilsonInterval w0 = wilson_interval(0, 100);
    CHECK(w0.lo <= 1e-15);
    CHECK(w0.hi > 0.0);
    const WilsonInterval w1 = wilson_interval(100, 100);
    CHECK(w1.hi >= 1.0 - 1e-15);
    CHECK(w1.lo < 1.0);
    const WilsonInterval mid = wilson_interval(50, 100);
    CHECK(mid.lo < 0.5);
    CHECK(mid.hi > 0.5);
}

TEST_CASE("one absolutely periodic point coincides with all orbits periodic") {
    // On the globally periodic surfaces, finding a single absolutely
    // 2pi-periodic point goes hand in hand with every sampled orbit being
    // 2pi-periodic; the two detections must agree.
    for (const Surface* s : {&sphere(), &zoll()}) {
        const PhasePoint witness = equator_to_phase(*s, {0.6, 0.2, 1});
        const JetReport rep = jet_norms(*s, witness, kTwoPi, 3, 1e-3, 1e-10, 1e-6);
        CHECK(rep.absolutely_periodic);

        int tested = 0;
        for (const PhasePoint& p : sample_liouville(*s, 200, 21)) {
            const double alpha = std::acos(std::clamp(std::abs(p.p_phi), 0.0, 1.0));
            if (alpha > 1.45) continue;  // keep clear of the domain bound
            CHECK(std::sqrt(displacement(*s, p, kTwoPi, 1e-10)) <= 1e-6);
            ++tested;
        }
        CHECK(tested >= 150);
    }
}

TEST_CASE("measure report: globally periodic surfaces have no nonperiodic mass") {
    for (const Surface* s : {&sphere(), &zoll()}) {
        const MeasureReport rep = estimate_measure(*s, kTwoPi, 2000, 1e-8, 20, 7, 2);
        CHECK(rep.n_nonperiodic == 0);
        CHECK(rep.n_periodic + rep.n_unresolved == rep.n);
        CHECK(rep.n_t_periodic == rep.n_periodic);
    }
}

TEST_CASE("measure report on the bump surface matches the band-area oracle") {
    const MeasureReport rep = estimate_measure(bump(), kTwoPi, 4000, 1e-8, 20, 7, 2);

    // Counts partition the sample set.
    CHECK(rep.n_periodic + rep.n_nonperiodic + rep.n_unresolved == rep.n);

    // Band fraction against direct quadrature of the Liouville density over
    // {alpha < 0.5} (alpha = acos(|cos beta| cos theta), beta uniform).
    const double norm = integrate_or_throw(
        [&](double th) { return (1.0 + bump().profile().value(th)) * std::cos(th); },
        -kPi / 2.0, kPi / 2.0, 1e-12);
    const double band_mass = integrate_or_throw(
        [&](double th) {
            const double c = std::cos(th);
            if (c <= std::cos(0.5)) return 0.0;
            const double p_beta = 2.0 * std::acos(std::cos(0.5) / c) / kPi;
            return (1.0 + bump().profile().value(th)) * c * p_beta;
        },
        -0.5, 0.5, 1e-12);
    const double oracle = band_mass / norm;  // = 0.1219 for this surface
    const double sigma = std::sqrt(oracle * (1.0 - oracle) / rep.n);
    CHECK(std::abs(rep.band_fraction - oracle) <= 4.0 * sigma);

    // Plenty of nonperiodic mass, with confidence.
    CHECK(rep.nonperiodic.lo >= 0.05);
    CHECK(rep.t_periodic.fraction >= oracle - 3.0 * sigma);
}

TEST_CASE("measure classification is independent of the thread count") {
    const MeasureReport serial = estimate_measure(bump(), kTwoPi, 1500, 1e-8, 20, 3, 1);
    const MeasureReport parallel = estimate_measure(bump(), kTwoPi, 1500, 1e-8, 20, 3, 4);
    CHECK(serial.n_periodic == parallel.n_periodic);
    CHECK(serial.n_nonperiodic == parallel.n_nonperiodic);
    CHECK(serial.n_unresolved == parallel.n_unresolved);
    CHECK(serial.n_band == parallel.n_band);
    CHECK(serial.n_t_periodic == parallel.n_t_periodic);
}

TEST_CASE("measure classification agrees with brute-force flow spot checks") {
    const auto samples = sample_liouville(bump(), 400, 11);
    int checked_periodic = 0;
    int checked_nonperiodic = 0;
    for (const PhasePoint& p : samples) {
        const double alpha = std::acos(std::clamp(std::abs(p.p_phi), 0.0, 1.0));
        if (alpha < 0.45 && checked_periodic < 25) {
            CHECK(displacement(bump(), p, kTwoPi, 1e-10) <= 1e-10);
            ++checked_periodic;
        } else if (alpha > 0.7 && alpha < 1.3 && checked_nonperiodic < 25) {
            // Far from the band edge, R(alpha) is far from every low-order
            // resonance at this tolerance; the orbit misses its start.
            const PeriodRecord rec = classify_alpha(bump(), alpha, 1e-8, 20);
            if (rec.resonance.type == OrbitClass::NonResonantAtTolerance) {
                CHECK(displacement(bump(), p, kTwoPi, 1e-10) > 1e-8);
                ++checked_nonperiodic;
            }
        }
    }
    CHECK(checked_periodic == 25);
    CHECK(checked_nonperiodic == 25);
}
