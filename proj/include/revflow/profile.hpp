#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace revflow {

/// Generator profile f(theta) of a surface of revolution. Built-in kinds:
///
///   Zero      f == 0 (round sphere)
///   Bump      one smooth bump supported on (a, b), 0 < a < b < pi/2,
///             infinitely flat at both endpoints, peak value = amplitude
///   OddBump   Bump(a, b, amplitude) minus its mirror image, an exactly odd
///             function supported on (a, b) u (-b, -a)
///   Sum       pointwise sum of component profiles
///
/// Derivatives are analytic for every kind; nothing is differenced.
class Profile {
  public:
    enum class Kind { Zero, Bump, OddBump, Sum };

    Profile() = default;  // the zero profile

    static Profile zero();
    static Profile bump(double a, double b, double amplitude);
    static Profile odd_bump(double a, double b, double amplitude);
    static Profile sum(std::vector<Profile> terms);

    double value(double theta) const;
    double derivative(double theta) const;
    double second_derivative(double theta) const;

    /// Even part (f(theta) + f(-theta)) / 2.
    double even_part(double theta) const;

    /// Infimum of |theta| over the support of the even part, +inf when the
    /// even part vanishes identically (Zero, OddBump). Structural, per kind.
    double even_support_infimum() const;

    /// True when f(-theta) == -f(theta) holds exactly by construction.
    bool is_odd() const;

    Kind kind() const { return kind_; }
    double support_lo() const { return a_; }
    double support_hi() const { return b_; }
    double amplitude() const { return amplitude_; }
    const std::vector<Profile>& terms() const { return terms_; }

    std::string describe() const;

    nlohmann::json to_json() const;
    static Profile from_json(const nlohmann::json& j);

  private:
    Kind kind_ = Kind::Zero;
    double a_ = 0.0;
    double b_ = 0.0;
    double amplitude_ = 0.0;
    std::vector<Profile> terms_;
};

}  // namespace revflow
