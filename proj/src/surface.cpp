#include "revflow/surface.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "revflow/quadrature.hpp"

namespace revflow {

namespace {
constexpr double kHalfPi = 1.57079632679489661923;
}

std::array<double, 3> Surface::embed(double theta, double phi, double tol) const {
    if (std::abs(theta) > kHalfPi + 1e-12)
        throw std::invalid_argument("embed: |theta| must not exceed pi/2");

    auto integrand = [this](double psi) {
        const double u = 1.0 + profile_.value(psi);
        const double s = std::sin(psi);
        return std::sqrt(std::max(0.0, u * u - s * s));
    };
    const double q3 = integrate_or_throw(integrand, 0.0, theta, tol);
    const double c = std::cos(theta);
    return {c * std::sin(phi), c * std::cos(phi), q3};
}

nlohmann::json Surface::to_json() const {
    nlohmann::json j = profile_.to_json();
    j["theta_max"] = theta_max_;
    j["grid_n"] = validation_.grid_n;
    return j;
}

Surface build_surface(const Profile& profile, int grid_n, double tol, double theta_max) {
    if (grid_n < 16) throw std::invalid_argument("build_surface: grid_n too small");
    if (!(theta_max > 0.0 && theta_max < kHalfPi))
        throw std::invalid_argument("build_surface: theta_max must lie in (0, pi/2)");

    // f(0) = 0 must hold; for the built-in kinds it does structurally, but a
    // Sum document could break it.
    if (std::abs(profile.value(0.0)) > 1e-12)
        throw std::invalid_argument("invalid profile: f(0) != 0");

    // Strict positivity on the open interval; the endpoints are excluded
    // because the margin legitimately vanishes at the poles (e.g. sphere).
    double min_margin = std::numeric_limits<double>::infinity();
    double worst_theta = 0.0;
    for (int i = 1; i < grid_n; ++i) {
        const double theta = -kHalfPi + (2.0 * kHalfPi) * i / grid_n;
        const double margin = 1.0 + profile.value(theta) - std::abs(std::sin(theta));
        if (margin < min_margin) {
            min_margin = margin;
            worst_theta = theta;
        }
    }
    // The margin tends to 0 at the poles for compactly supported profiles
    // (sphere caps), so the requirement is interior to the dynamical domain.
    double min_margin_interior = std::numeric_limits<double>::infinity();
    double worst_theta_interior = 0.0;
    for (int i = 0; i <= grid_n; ++i) {
        const double theta = -theta_max + (2.0 * theta_max) * i / grid_n;
        const double margin = 1.0 + profile.value(theta) - std::abs(std::sin(theta));
        if (margin < min_margin_interior) {
            min_margin_interior = margin;
            worst_theta_interior = theta;
        }
    }
    if (!(min_margin > 0.0) || min_margin_interior < tol) {
        std::ostringstream msg;
        msg << "invalid profile: 1 + f(theta) - |sin theta| = "
            << std::min(min_margin, min_margin_interior) << " at theta = "
            << (min_margin < min_margin_interior ? worst_theta : worst_theta_interior)
            << " (requires positive margin)";
        throw std::invalid_argument(msg.str());
    }

    Surface s;
    s.profile_ = profile;
    s.theta_max_ = theta_max;
    s.validation_.grid_n = grid_n;
    s.validation_.min_margin = min_margin_interior;
    s.validation_.worst_theta = worst_theta_interior;
    s.validation_.theta_max = theta_max;
    return s;
}

Surface surface_from_json(const nlohmann::json& doc) {
    const Profile p = Profile::from_json(doc);
    const double theta_max = doc.value("theta_max", kDefaultThetaMax);
    const int grid_n = doc.value("grid_n", 10000);
    return build_surface(p, grid_n, 1e-9, theta_max);
}

}  // namespace revflow
