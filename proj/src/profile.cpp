#include "revflow/profile.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace revflow {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

// One-sided bump on (a, b): amplitude * exp(4/(b-a)^2 - 1/((t-a)(b-t))).
// The exponent is <= 0 on the support, so the exp never overflows.
double bump_value(double a, double b, double amp, double t) {
    if (t <= a || t >= b) return 0.0;
    const double w = (t - a) * (b - t);
    const double peak = 4.0 / ((b - a) * (b - a));
    return amp * std::exp(peak - 1.0 / w);
}

double bump_derivative(double a, double b, double amp, double t) {
    if (t <= a || t >= b) return 0.0;
    const double w = (t - a) * (b - t);
    const double wp = a + b - 2.0 * t;
    return bump_value(a, b, amp, t) * wp / (w * w);
}

double bump_second_derivative(double a, double b, double amp, double t) {
    if (t <= a || t >= b) return 0.0;
    const double w = (t - a) * (b - t);
    const double wp = a + b - 2.0 * t;
    const double f = bump_value(a, b, amp, t);
    // d/dt (wp / w^2) = -2/w^2 - 2 wp^2 / w^3, plus the chain term (wp/w^2)^2.
    return f * ((wp * wp) / (w * w * w * w) - 2.0 / (w * w) - 2.0 * (wp * wp) / (w * w * w));
}

void check_support(double a, double b) {
    if (!(0.0 < a && a < b && b < kHalfPi)) {
        std::ostringstream msg;
        msg << "bump support (" << a << ", " << b
            << ") must satisfy 0 < a < b < pi/2";
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

Profile Profile::zero() { return Profile(); }

Profile Profile::bump(double a, double b, double amplitude) {
    check_support(a, b);
    Profile p;
    p.kind_ = Kind::Bump;
    p.a_ = a;
    p.b_ = b;
    p.amplitude_ = amplitude;
    return p;
}

Profile Profile::odd_bump(double a, double b, double amplitude) {
    check_support(a, b);
    Profile p;
    p.kind_ = Kind::OddBump;
    p.a_ = a;
    p.b_ = b;
    p.amplitude_ = amplitude;
    return p;
}

Profile Profile::sum(std::vector<Profile> terms) {
    Profile p;
    p.kind_ = Kind::Sum;
    p.terms_ = std::move(terms);
    return p;
}

double Profile::value(double theta) const {
    switch (kind_) {
        case Kind::Zero: return 0.0;
        case Kind::Bump: return bump_value(a_, b_, amplitude_, theta);
        case Kind::OddBump:
            return bump_value(a_, b_, amplitude_, theta) -
                   bump_value(a_, b_, amplitude_, -theta);
        case Kind::Sum: {
            double s = 0.0;
            for (const Profile& t : terms_) s += t.value(theta);
            return s;
        }
    }
    return 0.0;
}

double Profile::derivative(double theta) const {
    switch (kind_) {
        case Kind::Zero: return 0.0;
        case Kind::Bump: return bump_derivative(a_, b_, amplitude_, theta);
        case Kind::OddBump:
            return bump_derivative(a_, b_, amplitude_, theta) +
                   bump_derivative(a_, b_, amplitude_, -theta);
        case Kind::Sum: {
            double s = 0.0;
            for (const Profile& t : terms_) s += t.derivative(theta);
            return s;
        }
    }
    return 0.0;
}

double Profile::second_derivative(double theta) const {
    switch (kind_) {
        case Kind::Zero: return 0.0;
        case Kind::Bump: return bump_second_derivative(a_, b_, amplitude_, theta);
        case Kind::OddBump:
            return bump_second_derivative(a_, b_, amplitude_, theta) -
                   bump_second_derivative(a_, b_, amplitude_, -theta);
        case Kind::Sum: {
            double s = 0.0;
            for (const Profile& t : terms_) s += t.second_derivative(theta);
            return s;
        }
    }
    return 0.0;
}

double Profile::even_part(double theta) const {
    if (is_odd()) return 0.0;  // exact, not up to rounding
    return 0.5 * (value(theta) + value(-theta));
}

double Profile::even_support_infimum() const {
    switch (kind_) {
        case Kind::Zero: return std::numeric_limits<double>::infinity();
        case Kind::Bump: return a_;
        case Kind::OddBump: return std::numeric_limits<double>::infinity();
        case Kind::Sum: {
            double inf = std::numeric_limits<double>::infinity();
            for (const Profile& t : terms_)
                inf = std::min(inf, t.even_support_infimum());
            return inf;
        }
    }
    return std::numeric_limits<double>::infinity();
}

bool Profile::is_odd() const {
    switch (kind_) {
        case Kind::Zero: return true;
        case Kind::Bump: return false;
        case Kind::OddBump: return true;
        case Kind::Sum:
            for (const Profile& t : terms_)
                if (!t.is_odd()) return false;
            return true;
    }
    return false;
}

std::string Profile::describe() const {
    std::ostringstream s;
    switch (kind_) {
        case Kind::Zero: s << "zero"; break;
        case Kind::Bump: s << "bump(" << a_ << ", " << b_ << ", " << amplitude_ << ")"; break;
        case Kind::OddBump:
            s << "odd_bump(" << a_ << ", " << b_ << ", " << amplitude_ << ")";
            break;
        case Kind::Sum:
            s << "sum[";
            for (std::size_t i = 0; i < terms_.size(); ++i) {
                if (i) s << ", ";
                s << terms_[i].describe();
            }
            s << "]";
            break;
    }
    return s.str();
}

nlohmann::json Profile::to_json() const {
    nlohmann::json j;
    switch (kind_) {
        case Kind::Zero:
            j["kind"] = "zero";
            break;
        case Kind::Bump:
            j["kind"] = "bump";
            j["a"] = a_;
            j["b"] = b_;
            j["amplitude"] = amplitude_;
            break;
        case Kind::OddBump:
            j["kind"] = "odd_bump";
            j["a"] = a_;
            j["b"] = b_;
            j["amplitude"] = amplitude_;
            break;
        case Kind::Sum: {
            j["kind"] = "sum";
            nlohmann::json terms = nlohmann::json::array();
            for (const Profile& t : terms_) terms.push_back(t.to_json());
            j["terms"] = terms;
            break;
        }
    }
    return j;
}

Profile Profile::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") return zero();
    if (kind == "bump")
        return bump(j.at("a").get<double>(), j.at("b").get<double>(),
                    j.at("amplitude").get<double>());
    if (kind == "odd_bump")
        return odd_bump(j.at("a").get<double>(), j.at("b").get<double>(),
                        j.at("amplitude").get<double>());
    if (kind == "sum") {
        std::vector<Profile> terms;
        for (const auto& t : j.at("terms")) terms.push_back(from_json(t));
        return sum(std::move(terms));
    }
    throw std::invalid_argument("unknown profile kind '" + kind + "'");
}

}  // namespace revflow
