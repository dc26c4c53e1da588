#include "revflow/period.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "revflow/quadrature.hpp"

namespace revflow {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

void check_alpha(const Surface& surface, double alpha) {
    if (!(alpha > 0.0 && alpha < surface.theta_max())) {
        std::ostringstream msg;
        msg << "alpha = " << alpha << " must lie in (0, theta_max = "
            << surface.theta_max() << ")";
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

const char* to_string(OrbitClass c) {
    switch (c) {
        case OrbitClass::PeriodicResonant: return "periodic_resonant";
        case OrbitClass::NonResonantAtTolerance: return "non_resonant_at_tolerance";
        case OrbitClass::EquatorBand: return "equator_band";
    }
    return "?";
}

double theta_period(const Surface& surface, double alpha, double tol) {
    check_alpha(surface, alpha);
    const Profile& profile = surface.profile();
    const double sa = std::sin(alpha);
    auto integrand = [&](double u) {
        return profile.even_part(std::asin(sa * std::sin(u)));
    };
    const double integral =
        integrate_or_throw(integrand, -kPi / 2.0, kPi / 2.0, 0.5 * tol);
    return kTwoPi + 2.0 * integral;
}

double phi_rotation(const Surface& surface, double alpha, double tol) {
    check_alpha(surface, alpha);
    const Profile& profile = surface.profile();
    const double sa = std::sin(alpha);
    const double ca = std::cos(alpha);
    auto integrand = [&](double u) {
        const double s = sa * std::sin(u);
        return profile.even_part(std::asin(s)) / (1.0 - s * s);
    };
    const double integral =
        integrate_or_throw(integrand, -kPi / 2.0, kPi / 2.0, 0.5 * tol / ca);
    return 2.0 * ca * integral;
}

ResonanceResult classify_resonance(double rotation, double t_star, int k_max,
                                   double tol) {
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");

    const double x = rotation / kTwoPi;

    ResonanceResult best;
    best.type = OrbitClass::NonResonantAtTolerance;

    // Walk the continued-fraction convergents p_n/q_n of x. Denominators are
    // strictly increasing (after q_0 = 1), so the first convergent within
    // tolerance has the smallest q (shortest closing period). Non-resonant
    // results still carry the deepest convergent with q <= k_max as the best
    // rational approximation of the rotation number.
    std::int64_t pm1 = 1, pm2 = 0;  // p_{n-1}, p_{n-2}
    std::int64_t qm1 = 0, qm2 = 1;  // q_{n-1}, q_{n-2}
    double value = x;
    for (int it = 0; it < 64; ++it) {
        const double a_floor = std::floor(value);
        if (!(a_floor > -1e15 && a_floor < 1e15)) break;
        const std::int64_t a = static_cast<std::int64_t>(a_floor);

        const std::int64_t p = a * pm1 + pm2;
        const std::int64_t q = a * qm1 + qm2;
        if (q > k_max || q <= 0) break;

        const double err = std::abs(x - static_cast<double>(p) / static_cast<double>(q));
        best.p = p;
        best.q = static_cast<int>(q);
        best.fraction_error = err;
        if (err <= tol / (kTwoPi * q)) {
            best.type = OrbitClass::PeriodicResonant;
            best.full_period = q * t_star;
            return best;
        }

        pm2 = pm1;
        pm1 = p;
        qm2 = qm1;
        qm1 = q;

        const double rem = value - a_floor;
        if (rem < 1e-15) break;
        value = 1.0 / rem;
    }
    return best;
}

PeriodRecord classify_alpha(const Surface& surface, double alpha, double tol,
                            int k_max) {
    PeriodRecord rec;
    rec.alpha = alpha;
    try {
        rec.t_star = theta_period(surface, alpha, tol);
        rec.rotation = phi_rotation(surface, alpha, tol);
        rec.resonance = classify_resonance(rec.rotation, rec.t_star, k_max, tol);
        const double band_edge = surface.profile().even_support_infimum();
        if (std::isfinite(band_edge) && alpha <= band_edge) {
            rec.resonance.type = OrbitClass::EquatorBand;
            rec.resonance.p = 0;
            rec.resonance.q = 1;
            rec.resonance.fraction_error = 0.0;
            rec.resonance.full_period = rec.t_star;
        }
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return rec;
}

std::vector<PeriodRecord> scan(const Surface& surface,
                               const std::vector<double>& alpha_grid,
                               double tol, int k_max, int jobs) {
    std::vector<PeriodRecord> out(alpha_grid.size());
    if (jobs < 1) jobs = 1;
    const int max_jobs = static_cast<int>(std::max<std::size_t>(1, alpha_grid.size()));
    jobs = std::min(jobs, max_jobs);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = classify_alpha(surface, alpha_grid[i], tol, k_max);
    };

    if (jobs == 1) {
        work(0, alpha_grid.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (alpha_grid.size() + jobs - 1) / jobs;
        for (int j = 0; j < jobs; ++j) {
            const std::size_t b = std::min(alpha_grid.size(), j * chunk);
            const std::size_t e = std::min(alpha_grid.size(), b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace revflow
