#pragma once

#include <array>
#include <string>

#include <json.hpp>

#include "revflow/profile.hpp"

namespace revflow {

/// Outcome of the construction-time profile checks.
struct SurfaceValidation {
    int grid_n = 0;
    double min_margin = 0.0;     ///< min over grid of (1 + f) - |sin theta|
    double worst_theta = 0.0;    ///< where the margin is attained
    double theta_max = 0.0;
};

/// Surface of revolution generated by a profile f: metric
/// ds^2 = E(theta) dtheta^2 + G(theta) dphi^2 with E = (1+f)^2, G = cos^2.
/// Immutable after construction; dynamics are restricted to |theta| <=
/// theta_max, strictly inside the poles.
class Surface {
  public:
    double metric_e(double theta) const {
        const double u = 1.0 + profile_.value(theta);
        return u * u;
    }
    double metric_e_deriv(double theta) const {
        return 2.0 * (1.0 + profile_.value(theta)) * profile_.derivative(theta);
    }
    double metric_e_second(double theta) const {
        const double fp = profile_.derivative(theta);
        return 2.0 * fp * fp +
               2.0 * (1.0 + profile_.value(theta)) * profile_.second_derivative(theta);
    }
    static double metric_g(double theta) {
        const double c = std::cos(theta);
        return c * c;
    }
    static double metric_g_deriv(double theta) { return -std::sin(2.0 * theta); }
    static double metric_g_second(double theta) { return -2.0 * std::cos(2.0 * theta); }

    const Profile& profile() const { return profile_; }
    double theta_max() const { return theta_max_; }
    const SurfaceValidation& validation() const { return validation_; }

    /// R^3 embedding of (theta, phi); |theta| <= pi/2. The axial coordinate
    /// is obtained by adaptive quadrature to absolute tolerance tol.
    std::array<double, 3> embed(double theta, double phi, double tol = 1e-10) const;

    nlohmann::json to_json() const;

    friend Surface build_surface(const Profile&, int, double, double);

  private:
    Surface() = default;

    Profile profile_;
    double theta_max_ = 0.0;
    SurfaceValidation validation_;
};

/// Default dynamical domain bound, strictly inside the poles.
constexpr double kDefaultThetaMax = 1.57079632679489661923 - 0.05;

/// Validates the profile on a grid of grid_n points and returns the surface.
/// Throws std::invalid_argument naming the failing theta when the profile
/// violates 1 + f(theta) > |sin theta| with margin below tol.
Surface build_surface(const Profile& profile, int grid_n = 10000, double tol = 1e-9,
                      double theta_max = kDefaultThetaMax);

/// Reads {kind, parameters..., theta_max?, grid_n?} and builds the surface.
Surface surface_from_json(const nlohmann::json& doc);

}  // namespace revflow
