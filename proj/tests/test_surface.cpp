#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "oracles.hpp"
#include "revflow/profile.hpp"
#include "revflow/surface.hpp"

using namespace revflow;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("zero profile gives the unit sphere") {
    const Surface s = build_surface(Profile::zero());
    CHECK(s.metric_e(0.3) == 1.0);
    CHECK(s.metric_e(-1.2) == 1.0);
    CHECK(Surface::metric_g(0.3) == doctest::Approx(std::cos(0.3) * std::cos(0.3)));

    const auto q0 = s.embed(0.0, 0.0);
    CHECK(q0[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(q0[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q0[2] == doctest::Approx(0.0).epsilon(1e-14));

    // q3(pi/2) = integral of cos = 1 on the sphere.
    const auto qp = s.embed(kPi / 2.0, 0.0, 1e-12);
    CHECK(qp[2] == doctest::Approx(1.0).epsilon(1e-10));

    for (double theta : {-1.4, -0.7, 0.0, 0.4, 1.1}) {
        for (double phi : {0.0, 1.0, 4.0}) {
            const auto q = s.embed(theta, phi, 1e-11);
            const double r2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
            CHECK(std::abs(r2 - 1.0) < 2e-11);
        }
    }
}

TEST_CASE("bump profile validates; inverted bump violates the margin") {
    CHECK_NOTHROW(build_surface(Profile::bump(0.5, 1.0, 0.1)));

    try {
        build_surface(Profile::bump(0.5, 1.0, -2.0));
        FAIL("expected invalid-profile error");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("theta") != std::string::npos);
    }
}

TEST_CASE("bump support endpoints are hard zeros") {
    const Profile p = Profile::bump(0.5, 1.0, 0.1);
    CHECK(p.value(0.5) == 0.0);
    CHECK(p.value(1.0) == 0.0);
    CHECK(p.value(0.499) == 0.0);
    CHECK(p.value(1.0001) == 0.0);
    CHECK(p.value(-0.7) == 0.0);  // one-sided support
    CHECK(p.value(0.75) == doctest::Approx(0.1).epsilon(1e-14));  // peak
    CHECK(p.value(0.6) > 0.0);
}

TEST_CASE("odd bump is exactly odd; even part vanishes identically") {
    const Profile p = Profile::odd_bump(0.25, 0.45, 0.1);
    CHECK(p.is_odd());
    for (double t = -1.5; t <= 1.5; t += 0.0625) {
        CHECK(p.value(-t) == -p.value(t));
        CHECK(p.even_part(t) == 0.0);
    }
}

TEST_CASE("even part of a one-sided bump is half the pullback") {
    const Profile p = Profile::bump(0.5, 1.0, 0.37);
    CHECK(p.even_part(0.7) == doctest::Approx(p.value(0.7) / 2.0).epsilon(1e-15));
    CHECK(p.even_part(-0.7) == p.even_part(0.7));
    CHECK(Profile::zero().even_part(0.3) == 0.0);
}

TEST_CASE("profile derivatives agree with central differences") {
    const Profile profiles[] = {
        Profile::bump(0.5, 1.0, 0.1),
        Profile::odd_bump(0.25, 0.45, 0.1),
        Profile::sum({Profile::bump(0.3, 0.6, 0.05), Profile::odd_bump(0.8, 1.1, 0.2)}),
    };
    const double h = 1e-5;
    for (const Profile& p : profiles) {
        for (double t = -1.45; t <= 1.45; t += 0.1043) {
            const double fd1 = (p.value(t + h) - p.value(t - h)) / (2 * h);
            const double fd2 =
                (p.value(t + h) - 2 * p.value(t) + p.value(t - h)) / (h * h);
            CHECK(p.derivative(t) == doctest::Approx(fd1).epsilon(1e-5));
            // Second differences lose ~6 digits; scale the comparison.
            CHECK(std::abs(p.second_derivative(t) - fd2) <
                  1e-4 * std::max(1.0, std::abs(fd2)));
        }
    }
}

TEST_CASE("even-support infimum per kind") {
    CHECK(std::isinf(Profile::zero().even_support_infimum()));
    CHECK(std::isinf(Profile::odd_bump(0.25, 0.45, 0.1).even_support_infimum()));
    CHECK(Profile::bump(0.5, 1.0, 0.1).even_support_infimum() == 0.5);
    const Profile s = Profile::sum(
        {Profile::bump(0.5, 1.0, 0.1), Profile::bump(0.3, 0.4, 0.01)});
    CHECK(s.even_support_infimum() == 0.3);
}

TEST_CASE("embedding axial coordinate: adaptive vs high-order fixed rule") {
    const Surface s = build_surface(Profile::bump(0.5, 1.0, 0.1));
    auto integrand = [&](double psi) {
        const double u = 1.0 + s.profile().value(psi);
        return std::sqrt(u * u - std::sin(psi) * std::sin(psi));
    };
    const double fixed = oracles::simpson(integrand, 0.0, kPi / 2.0, 1000000);
    const auto q = s.embed(kPi / 2.0, 0.0, 1e-10);
    CHECK(std::abs(q[2] - fixed) < 1e-8);
}

TEST_CASE("validation margin is positive on every built surface") {
    for (const Surface& s :
         {build_surface(Profile::zero()), build_surface(Profile::bump(0.5, 1.0, 0.1)),
          build_surface(Profile::odd_bump(0.25, 0.45, 0.1))}) {
        CHECK(s.validation().min_margin > 0.0);
        CHECK(s.theta_max() == doctest::Approx(kPi / 2.0 - 0.05));
    }
}

TEST_CASE("bump construction rejects bad supports") {
    CHECK_THROWS_AS(Profile::bump(-0.1, 0.5, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(Profile::bump(0.7, 0.6, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(Profile::bump(0.5, 1.6, 0.1), std::invalid_argument);
}

TEST_CASE("surface JSON round trip") {
    const Surface s = build_surface(
        Profile::sum({Profile::bump(0.5, 1.0, 0.1), Profile::odd_bump(0.2, 0.4, 0.05)}),
        8192, 1e-9, 1.5);
    const nlohmann::json doc = s.to_json();
    const Surface t = surface_from_json(doc);
    CHECK(t.theta_max() == s.theta_max());
    CHECK(t.profile().describe() == s.profile().describe());
    for (double x : {-1.3, -0.4, 0.33, 0.77, 1.2})
        CHECK(t.profile().value(x) == s.profile().value(x));
}

TEST_CASE("malformed surface documents are rejected with a named field") {
    CHECK_THROWS(surface_from_json(nlohmann::json{{"kind", "mystery"}}));
    CHECK_THROWS(surface_from_json(nlohmann::json{{"kind", "bump"}, {"a", 0.5}}));
}
