#include "revflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace revflow {

namespace {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (QUADPACK dqk15 values).
// xgk[1], xgk[3], ... are the Gauss-7 abscissae.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Interval {
    double a, b;
    double value;
    double error;
};

// Kronrod estimate with embedded Gauss error on one interval.
Interval gk15(const std::function<double(double)>& fn, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);

    const double fc = fn(c);
    double result_gauss = kWg[3] * fc;
    double result_kronrod = kWgk[7] * fc;

    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        const double f1 = fn(c - x);
        const double f2 = fn(c + x);
        result_kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) result_gauss += kWg[j / 2] * (f1 + f2);
    }

    Interval out;
    out.a = a;
    out.b = b;
    out.value = result_kronrod * h;
    // Raw |K15 - G7| spread; conservative but reliable as a bound.
    out.error = std::abs(result_kronrod - result_gauss) * std::abs(h);
    return out;
}

struct WorseError {
    bool operator()(const Interval& x, const Interval& y) const {
        return x.error < y.error;
    }
};

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& fn,
                              double a, double b, double abs_tol,
                              int max_intervals) {
    QuadResult res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    if (a > b) {
        res = integrate_adaptive(fn, b, a, abs_tol, max_intervals);
        res.value = -res.value;
        return res;
    }

    std::priority_queue<Interval, std::vector<Interval>, WorseError> heap;
    heap.push(gk15(fn, a, b));
    double total_value = heap.top().value;
    double total_error = heap.top().error;
    int n = 1;

    while (total_error > abs_tol && n < max_intervals) {
        Interval worst = heap.top();
        heap.pop();
        total_value -= worst.value;
        total_error -= worst.error;

        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval narrowed to machine resolution; keep its estimate.
            total_value += worst.value;
            total_error += worst.error;
            break;
        }
        Interval left = gk15(fn, worst.a, mid);
        Interval right = gk15(fn, mid, worst.b);
        total_value += left.value + right.value;
        total_error += left.error + right.error;
        heap.push(left);
        heap.push(right);
        ++n;
    }

    // Recompute the sums from the heap to avoid cancellation buildup.
    total_value = 0.0;
    total_error = 0.0;
    while (!heap.empty()) {
        total_value += heap.top().value;
        total_error += heap.top().error;
        heap.pop();
    }

    res.value = total_value;
    res.error_estimate = total_error;
    res.converged = total_error <= abs_tol;
    res.intervals = n;
    return res;
}

double integrate_or_throw(const std::function<double(double)>& fn,
                          double a, double b, double abs_tol,
                          int max_intervals) {
    QuadResult r = integrate_adaptive(fn, a, b, abs_tol, max_intervals);
    if (!r.converged) {
        std::ostringstream msg;
        msg << "quadrature failed to reach tolerance " << abs_tol
            << " (achieved " << r.error_estimate << " with " << r.intervals
            << " intervals)";
        throw std::runtime_error(msg.str());
    }
    return r.value;
}

}  // namespace revflow
