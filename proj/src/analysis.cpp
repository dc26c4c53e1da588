#include "revflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace revflow {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double squared_displacement(const PhasePoint& a, const PhasePoint& b) {
    const double dtheta = b.theta - a.theta;
    const double dphi = std::remainder(b.phi - a.phi, kTwoPi);
    const double dpt = b.p_theta - a.p_theta;
    const double dpp = b.p_phi - a.p_phi;
    return dtheta * dtheta + dphi * dphi + dpt * dpt + dpp * dpp;
}

template <typename FlowFn>
double displacement_impl(const FlowFn& flow_to, double h0, const PhasePoint& p0,
                         double /*T*/) {
    // Normalize to the unit cosphere, flow, scale the momenta back: exact by
    // the degree-0/1 homogeneity of the unit-speed flow.
    PhasePoint unit = p0;
    unit.p_theta /= h0;
    unit.p_phi /= h0;
    PhasePoint end = flow_to(unit);
    end.p_theta *= h0;
    end.p_phi *= h0;
    return squared_displacement(p0, end);
}

}  // namespace

double displacement(const Surface& surface, const PhasePoint& p0, double T,
                    double tol) {
    const double h0 = hamiltonian(surface, p0);
    if (!(h0 > 0.0)) throw std::invalid_argument("displacement: zero covector");
    return displacement_impl(
        [&](const PhasePoint& u) { return flow_final(surface, u, T, tol); }, h0, p0, T);
}

double displacement(const HalfSurface& half, const PhasePoint& p0, double T,
                    double tol) {
    const double h0 = hamiltonian(half.base, p0);
    if (!(h0 > 0.0)) throw std::invalid_argument("displacement: zero covector");
    return displacement_impl(
        [&](const PhasePoint& u) { return billiard_final(half, u, T, tol); }, h0, p0, T);
}

namespace {

// Central-difference stencils (second order) per derivative order.
const std::vector<std::pair<int, double>>& stencil(int order) {
    static const std::vector<std::vector<std::pair<int, double>>> table = {
        {{0, 1.0}},
        {{-1, -0.5}, {1, 0.5}},
        {{-1, 1.0}, {0, -2.0}, {1, 1.0}},
        {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}},
        {{-2, 1.0}, {-1, -4.0}, {0, 6.0}, {1, -4.0}, {2, 1.0}},
    };
    return table[static_cast<std::size_t>(order)];
}

struct Offset3 {
    int a, b, c;
    bool operator<(const Offset3& o) const {
        if (a != o.a) return a < o.a;
        if (b != o.b) return b < o.b;
        return c < o.c;
    }
};

// Max |mixed partial| per total order on a cached displacement grid.
std::vector<double> jet_pass(const Surface& surface, const PhasePoint& p0,
                             double T, int order, double h, double tol) {
    std::map<Offset3, double> cache;
    auto d_at = [&](const Offset3& o) {
        auto it = cache.find(o);
        if (it != cache.end()) return it->second;
        PhasePoint p = p0;
        p.theta += h * o.a;
        p.p_theta += h * o.b;
        p.p_phi += h * o.c;
        const double d = displacement(surface, p, T, tol);
        cache.emplace(o, d);
        return d;
    };

    std::vector<double> max_by_order(static_cast<std::size_t>(order) + 1, 0.0);
    for (int i = 0; i <= order; ++i) {
        for (int j = 0; i + j <= order; ++j) {
            for (int k = 0; i + j + k <= order; ++k) {
                const int total = i + j + k;
                double acc = 0.0;
                for (const auto& [oa, ca] : stencil(i))
                    for (const auto& [ob, cb] : stencil(j))
                        for (const auto& [oc, cc] : stencil(k))
                            acc += ca * cb * cc * d_at({oa, ob, oc});
                const double value = acc / std::pow(h, total);
                max_by_order[static_cast<std::size_t>(total)] =
                    std::max(max_by_order[static_cast<std::size_t>(total)],
                             std::abs(value));
            }
        }
    }
    return max_by_order;
}

}  // namespace

JetReport jet_norms(const Surface& surface, const PhasePoint& p0, double T,
                    int order, double fd_step, double tol, double jet_tol) {
    if (order < 0 || order > 4)
        throw std::invalid_argument("jet order K must lie in 0..4");
    if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be positive");

    JetReport rep;
    rep.base = p0;
    rep.period = T;
    rep.order = order;
    rep.fd_step = fd_step;
    rep.jet_tol = jet_tol;
    rep.max_by_order = jet_pass(surface, p0, T, order, fd_step, tol);
    rep.max_by_order_half_step = jet_pass(surface, p0, T, order, 0.5 * fd_step, tol);

    // Rotational symmetry: D must not depend on the base azimuth.
    const double d0 = displacement(surface, p0, T, tol);
    for (int s = 1; s <= 8; ++s) {
        PhasePoint shifted = p0;
        shifted.phi += kTwoPi * s / 8.0;
        rep.phi_invariance_dev = std::max(
            rep.phi_invariance_dev,
            std::abs(displacement(surface, shifted, T, tol) - d0));
    }

    auto verdict = [&](const std::vector<double>& norms) {
        for (int j = 0; j <= order; ++j) {
            if (norms[static_cast<std::size_t>(j)] > jet_tol) return j;
        }
        return -1;
    };
    const int first_full = verdict(rep.max_by_order);
    const int first_half = verdict(rep.max_by_order_half_step);
    if ((first_full < 0) != (first_half < 0)) {
        std::ostringstream msg;
        msg << "jet verdict unstable under step halving (fd_step = " << fd_step
            << "): noise floor exceeds signal";
        throw std::runtime_error(msg.str());
    }
    rep.absolutely_periodic = first_full < 0;
    rep.first_nonvanishing_order = first_full;
    if (first_full >= 0)
        rep.first_nonvanishing_magnitude =
            rep.max_by_order[static_cast<std::size_t>(first_full)];
    return rep;
}

ReturnTime return_time(const Surface& surface, const PhasePoint& p0,
                       double t_guess, double radius, double tol, double fd_step) {
    if (!(radius > 0.0)) throw std::invalid_argument("search radius must be positive");

    const double inv_phi = 0.6180339887498949;
    auto minimize = [&](const PhasePoint& p) {
        double a = t_guess - radius;
        double b = t_guess + radius;
        auto f = [&](double t) { return displacement(surface, p, t, tol); };
        double x1 = b - inv_phi * (b - a);
        double x2 = a + inv_phi * (b - a);
        double f1 = f(x1);
        double f2 = f(x2);
        while (b - a > 1e-10 * std::max(1.0, std::abs(t_guess))) {
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
    };

    ReturnTime out;
    out.t_star = minimize(p0);
    if (std::abs(out.t_star - t_guess) > 0.98 * radius)
        throw std::runtime_error("return time: no interior minimum in the window");
    out.displacement_at_min = displacement(surface, p0, out.t_star, tol);

    for (int axis = 0; axis < 3; ++axis) {
        PhasePoint plus = p0;
        PhasePoint minus = p0;
        double* fields_plus[3] = {&plus.theta, &plus.p_theta, &plus.p_phi};
        double* fields_minus[3] = {&minus.theta, &minus.p_theta, &minus.p_phi};
        *fields_plus[axis] += fd_step;
        *fields_minus[axis] -= fd_step;
        const double tp = minimize(plus);
        const double tm = minimize(minus);
        out.gradient[static_cast<std::size_t>(axis)] = (tp - tm) / (2.0 * fd_step);
    }
    out.gradient_norm = std::sqrt(out.gradient[0] * out.gradient[0] +
                                  out.gradient[1] * out.gradient[1] +
                                  out.gradient[2] * out.gradient[2]);
    return out;
}

namespace {

// splitmix64; per-index streams are decorrelated by scrambling the index into
// the starting state, so parallel and serial sampling agree bit for bit.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t s) : state(s) {}

    std::uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }
};

std::uint64_t scramble(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::vector<PhasePoint> sample_liouville(const Surface& surface, int n,
                                         std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample count must be >= 1");

    // Envelope for rejection sampling of the base density (1 + f) cos(theta).
    double bound = 0.0;
    const int grid = 4096;
    for (int i = 0; i <= grid; ++i) {
        const double th = -kPi / 2.0 + kPi * i / grid;
        bound = std::max(bound,
                         (1.0 + surface.profile().value(th)) * std::cos(th));
    }
    bound *= 1.0 + 1e-9;

    std::vector<PhasePoint> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        SplitMix64 rng(scramble(seed ^ scramble(static_cast<std::uint64_t>(i))));
        double theta = 0.0;
        for (;;) {
            theta = -kPi / 2.0 + kPi * rng.next_unit();
            const double density =
                (1.0 + surface.profile().value(theta)) * std::cos(theta);
            if (rng.next_unit() * bound <= density) break;
        }
        const double phi = kTwoPi * rng.next_unit();
        const double beta = kTwoPi * rng.next_unit();
        PhasePoint p;
        p.theta = theta;
        p.phi = phi;
        p.p_theta = std::sqrt(surface.metric_e(theta)) * std::sin(beta);
        p.p_phi = std::sqrt(Surface::metric_g(theta)) * std::cos(beta);
        out.push_back(p);
    }
    return out;
}

WilsonInterval wilson_interval(int count, int n, double z) {
    WilsonInterval w;
    if (n <= 0) return w;
    const double phat = static_cast<double>(count) / n;
    const double z2 = z * z;
    const double den = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / den;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / den;
    w.fraction = phat;
    w.lo = std::max(0.0, center - half);
    w.hi = std::min(1.0, center + half);
    return w;
}

MeasureReport estimate_measure(const Surface& surface, double T, int n,
                               double tol, int k_max, std::uint64_t seed,
                               int jobs) {
    MeasureReport rep;
    rep.n = n;
    rep.T = T;
    rep.tol = tol;
    rep.k_max = k_max;
    rep.seed = seed;

    const std::vector<PhasePoint> samples = sample_liouville(surface, n, seed);
    const double band_edge = surface.profile().even_support_infimum();
    const double theta_max = surface.theta_max();

    enum class Tag { Periodic, TPeriodic, Band, BandTPeriodic, Nonperiodic, Unresolved };

    auto classify_one = [&](const PhasePoint& p) -> Tag {
        try {
            const double alpha = std::acos(std::clamp(std::abs(p.p_phi), 0.0, 1.0));
            if (alpha >= theta_max) return Tag::Unresolved;

            double t_star, rotation;
            bool in_band = std::isfinite(band_edge) && alpha <= band_edge;
            if (in_band) {
                t_star = kTwoPi;
                rotation = 0.0;
            } else if (alpha == 0.0) {
                t_star = kTwoPi;
                rotation = 0.0;
            } else {
                t_star = theta_period(surface, alpha, tol);
                rotation = phi_rotation(surface, alpha, tol);
            }
            const ResonanceResult res = classify_resonance(rotation, t_star, k_max, tol);
            if (res.type != OrbitClass::PeriodicResonant && !in_band)
                return Tag::Nonperiodic;

            const double full = res.type == OrbitClass::PeriodicResonant
                                    ? res.full_period
                                    : t_star;
            const double m = std::round(T / full);
            const bool t_periodic =
                m >= 1.0 && std::abs(m * full - T) <= std::max(100.0 * tol, 1e-9);
            if (in_band) return t_periodic ? Tag::BandTPeriodic : Tag::Band;
            return t_periodic ? Tag::TPeriodic : Tag::Periodic;
        } catch (const std::exception&) {
            return Tag::Unresolved;
        }
    };

    std::vector<Tag> tags(samples.size());
    if (jobs < 1) jobs = 1;
    if (jobs == 1) {
        for (std::size_t i = 0; i < samples.size(); ++i) tags[i] = classify_one(samples[i]);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (samples.size() + jobs - 1) / jobs;
        for (int j = 0; j < jobs; ++j) {
            const std::size_t b = std::min(samples.size(), static_cast<std::size_t>(j) * chunk);
            const std::size_t e = std::min(samples.size(), b + chunk);
            if (b < e)
                pool.emplace_back([&, b, e] {
                    for (std::size_t i = b; i < e; ++i) tags[i] = classify_one(samples[i]);
                });
        }
        for (auto& th : pool) th.join();
    }

    for (Tag tag : tags) {
        switch (tag) {
            case Tag::Unresolved:
                ++rep.n_unresolved;
                break;
            case Tag::Nonperiodic:
                ++rep.n_nonperiodic;
                break;
            case Tag::BandTPeriodic:
                ++rep.n_band;
                ++rep.n_periodic;
                ++rep.n_t_periodic;
                break;
            case Tag::Band:
                ++rep.n_band;
                ++rep.n_periodic;
                break;
            case Tag::TPeriodic:
                ++rep.n_periodic;
                ++rep.n_t_periodic;
                break;
            case Tag::Periodic:
                ++rep.n_periodic;
                break;
        }
    }

    rep.periodic = wilson_interval(rep.n_periodic, n);
    rep.nonperiodic = wilson_interval(rep.n_nonperiodic, n);
    rep.t_periodic = wilson_interval(rep.n_t_periodic, n);
    rep.band_fraction = static_cast<double>(rep.n_band) / n;
    return rep;
}

}  // namespace revflow
