#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace revflow {

using State4 = std::array<double, 4>;

/// Adaptive Dormand-Prince 5(4) integrator over a fixed 4-dimensional state.
/// The controller accepts a step when the scaled embedded-error norm is <= 1
/// and advances with the 5th-order solution. advance() lands exactly on the
/// requested target time so callers can force sample points and endpoints.
template <typename Rhs>
class Dopri5 {
  public:
    Dopri5(Rhs rhs, double atol, double rtol, double h_max = 0.25,
           long max_steps = 50'000'000)
        : rhs_(std::move(rhs)), atol_(atol), rtol_(rtol), h_max_(h_max),
          max_steps_(max_steps) {}

    struct Step {
        State4 y;
        double error_norm;
    };

    Step try_step(const State4& y, double h) const {
        // Dormand-Prince RK5(4)7M coefficients.
        State4 k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{}, tmp{};
        rhs_(y, k1);
        axpy(tmp, y, h, {0.2, 0, 0, 0, 0, 0}, k1, k2, k3, k4, k5, k6);
        rhs_(tmp, k2);
        axpy(tmp, y, h, {3.0 / 40, 9.0 / 40, 0, 0, 0, 0}, k1, k2, k3, k4, k5, k6);
        rhs_(tmp, k3);
        axpy(tmp, y, h, {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0}, k1, k2, k3, k4, k5, k6);
        rhs_(tmp, k4);
        axpy(tmp, y, h,
             {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
             k1, k2, k3, k4, k5, k6);
        rhs_(tmp, k5);
        axpy(tmp, y, h,
             {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
             k1, k2, k3, k4, k5, k6);
        rhs_(tmp, k6);
        axpy(tmp, y, h,
             {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
             k1, k2, k3, k4, k5, k6);
        rhs_(tmp, k7);

        Step out;
        out.y = tmp;  // 5th-order solution (k7 row equals the b coefficients)

        // Embedded 4th-order difference, e_i = b5_i - b4_i.
        constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
        constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
        constexpr double e4 = 125.0 / 192 - 393.0 / 640;
        constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
        constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
        constexpr double e7 = -1.0 / 40;

        double norm2 = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                    e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale =
                atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(out.y[i]));
            const double q = err / scale;
            norm2 += q * q;
        }
        out.error_norm = std::sqrt(norm2 / 4.0);
        return out;
    }

    /// Integrates (t, y) in place until t == t_target. on_step(t_prev, y_prev,
    /// t_new, y_new) is invoked after every accepted step and may return false
    /// to halt early (the state is left at the step end).
    template <typename OnStep>
    void advance(double& t, State4& y, double t_target, OnStep&& on_step) {
        const double dir = (t_target >= t) ? 1.0 : -1.0;
        if (t == t_target) return;
        double h = std::min(initial_step_, std::abs(t_target - t)) * dir;
        long steps = 0;

        while (t != t_target) {
            bool clamped = false;
            if (std::abs(h) >= std::abs(t_target - t)) {
                h = t_target - t;
                clamped = true;
            }
            const Step s = try_step(y, h);
            if (s.error_norm <= 1.0) {
                const double t_prev = t;
                const State4 y_prev = y;
                t = clamped ? t_target : t + h;
                y = s.y;
                const bool keep_going = on_step(t_prev, y_prev, t, y);
                h = next_h(h, s.error_norm, dir);
                if (!keep_going) return;
            } else {
                h = next_h(h, s.error_norm, dir);
                if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
                    throw std::runtime_error("ode step size underflow");
            }
            if (++steps > max_steps_)
                throw std::runtime_error("ode step budget exceeded");
        }
    }

    void advance(double& t, State4& y, double t_target) {
        advance(t, y, t_target, [](double, const State4&, double, const State4&) {
            return true;
        });
    }

    void set_initial_step(double h) { initial_step_ = h; }

  private:
    static void axpy(State4& out, const State4& y, double h,
                     const std::array<double, 6>& c, const State4& k1,
                     const State4& k2, const State4& k3, const State4& k4,
                     const State4& k5, const State4& k6) {
        for (int i = 0; i < 4; ++i) {
            out[i] = y[i] + h * (c[0] * k1[i] + c[1] * k2[i] + c[2] * k3[i] +
                                 c[3] * k4[i] + c[4] * k5[i] + c[5] * k6[i]);
        }
    }

    double next_h(double h, double error_norm, double dir) const {
        double factor;
        if (error_norm <= 1e-30) {
            factor = 5.0;
        } else {
            factor = 0.9 * std::pow(error_norm, -0.2);
            factor = std::clamp(factor, 0.2, 5.0);
        }
        double hn = h * factor;
        if (std::abs(hn) > h_max_) hn = h_max_ * dir;
        return hn;
    }

    Rhs rhs_;
    double atol_;
    double rtol_;
    double h_max_;
    long max_steps_;
    double initial_step_ = 0.01;
};

/// Locates a sign change of g along the flow inside one accepted step by
/// bisection with re-integration from the step start. Returns (t*, y(t*))
/// with the bracket narrowed below t_tol. g(y_lo) and g at the step end must
/// have opposite (or zero) sign.
template <typename Integrator, typename G>
std::pair<double, State4> bisect_crossing(Integrator& integ, double t_lo,
                                          const State4& y_lo, double t_hi,
                                          const G& g, double t_tol) {
    const double g_lo = g(y_lo);
    if (g_lo == 0.0) return {t_lo, y_lo};

    double a = t_lo, b = t_hi;
    State4 ya = y_lo;
    while (std::abs(b - a) > t_tol) {
        const double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        double t = a;
        State4 y = ya;
        integ.advance(t, y, mid);
        const double gm = g(y);
        if (gm == 0.0) {
            return {mid, y};
        } else if ((gm > 0.0) == (g_lo > 0.0)) {
            a = mid;
            ya = y;
        } else {
            b = mid;
        }
    }
    // Return the state just past the crossing so callers continue from it.
    double t = a;
    State4 y = ya;
    integ.advance(t, y, b);
    return {b, y};
}

}  // namespace revflow
