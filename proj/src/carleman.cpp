#include "revflow/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace revflow {

CarlemanSequence::CarlemanSequence(Kind kind, double s, std::vector<double> values)
    : kind_(kind), gevrey_s_(s), log_values_(std::move(values)) {}

CarlemanSequence CarlemanSequence::factorial() {
    return CarlemanSequence(Kind::Factorial, 0.0, {});
}

CarlemanSequence CarlemanSequence::gevrey(double s) {
    if (s < 1.0) throw std::invalid_argument("Gevrey index must satisfy s >= 1");
    return CarlemanSequence(Kind::Gevrey, s, {});
}

CarlemanSequence CarlemanSequence::explicit_values(std::vector<double> values) {
    std::vector<double> logs;
    logs.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) {
            std::ostringstream msg;
            msg << "invalid sequence: m_" << (i + 1) << " = " << values[i]
                << " is not positive";
            throw std::invalid_argument(msg.str());
        }
        logs.push_back(std::log(values[i]));
    }
    return CarlemanSequence(Kind::Explicit, 0.0, std::move(logs));
}

double CarlemanSequence::log_term(int n) const {
    if (n < 1) throw std::out_of_range("sequence index starts at 1");
    switch (kind_) {
        case Kind::Factorial:
            return std::lgamma(static_cast<double>(n) + 1.0);
        case Kind::Gevrey:
            return gevrey_s_ * n * std::log(static_cast<double>(n));
        case Kind::Explicit:
            if (static_cast<std::size_t>(n) > log_values_.size())
                throw std::out_of_range("explicit sequence too short");
            return log_values_[static_cast<std::size_t>(n) - 1];
    }
    throw std::logic_error("unreachable");
}

int CarlemanSequence::max_index() const {
    if (kind_ == Kind::Explicit) return static_cast<int>(log_values_.size());
    return std::numeric_limits<int>::max();
}

std::string CarlemanSequence::describe() const {
    switch (kind_) {
        case Kind::Factorial: return "factorial";
        case Kind::Gevrey: {
            std::ostringstream s;
            s << "gevrey(s=" << gevrey_s_ << ")";
            return s.str();
        }
        case Kind::Explicit: {
            std::ostringstream s;
            s << "explicit[" << log_values_.size() << "]";
            return s.str();
        }
    }
    return "?";
}

std::string to_string(QuasianalyticityVerdict v) {
    switch (v) {
        case QuasianalyticityVerdict::Quasianalytic: return "quasianalytic";
        case QuasianalyticityVerdict::NotQuasianalytic: return "not_quasianalytic";
        case QuasianalyticityVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

// Throws if the sequence is not positive nondecreasing over 1..n_hi.
void require_valid(const CarlemanSequence& seq, int n_hi) {
    if (n_hi > seq.max_index())
        throw std::invalid_argument("sequence shorter than requested range");
    double prev = seq.log_term(1);
    for (int n = 2; n <= n_hi; ++n) {
        const double cur = seq.log_term(n);
        if (cur < prev - 1e-12) {
            std::ostringstream msg;
            msg << "invalid sequence: decreasing at n = " << n;
            throw std::invalid_argument(msg.str());
        }
        prev = cur;
    }
}

}  // namespace

RegularityReport check_regularity(const CarlemanSequence& seq, int n_max, double tol) {
    if (n_max < 4) throw std::invalid_argument("check_regularity needs N >= 4");
    require_valid(seq, n_max + 1);

    RegularityReport rep;
    rep.valid_sequence = true;
    rep.checked_up_to = n_max;

    std::vector<double> lm(static_cast<std::size_t>(n_max) + 2);
    for (int n = 1; n <= n_max + 1; ++n) lm[static_cast<std::size_t>(n)] = seq.log_term(n);

    // Condition (1): m_n / n^p nondecreasing on the tail for each ladder p.
    const int tail_start = std::max(4, n_max / 2);
    rep.growth_ok = true;
    for (double p : {1.0, 2.0, 4.0, 8.0}) {
        for (int n = tail_start; n < n_max; ++n) {
            const double lhs = lm[static_cast<std::size_t>(n) + 1] - lm[static_cast<std::size_t>(n)];
            const double rhs = p * (std::log(n + 1.0) - std::log(static_cast<double>(n)));
            if (lhs < rhs - tol) {
                rep.growth_ok = false;
                break;
            }
        }
        if (!rep.growth_ok) break;
    }

    // Condition (2): least C with m_{n+1}/m_n <= n C^n over the range.
    double log_c = -std::numeric_limits<double>::infinity();
    for (int n = 1; n <= n_max; ++n) {
        const double need =
            (lm[static_cast<std::size_t>(n) + 1] - lm[static_cast<std::size_t>(n)] -
             std::log(static_cast<double>(n))) / n;
        log_c = std::max(log_c, need);
    }
    if (std::isfinite(log_c)) rep.ratio_constant = std::exp(log_c);

    // Condition (3): second differences of log(m_n / n!).
    double min_d2 = std::numeric_limits<double>::infinity();
    for (int n = 2; n <= n_max - 1; ++n) {
        auto l = [&](int k) {
            return lm[static_cast<std::size_t>(k)] - std::lgamma(k + 1.0);
        };
        min_d2 = std::min(min_d2, l(n + 1) - 2.0 * l(n) + l(n - 1));
    }
    rep.convexity_min_second_difference = min_d2;
    return rep;
}

std::vector<std::pair<int, double>> quasianalyticity_partial_sums(
    const CarlemanSequence& seq, int n_max) {
    if (n_max < 16) throw std::invalid_argument("partial sums need N >= 16");
    require_valid(seq, n_max);

    const int marks[4] = {n_max / 8, n_max / 4, n_max / 2, n_max};
    std::vector<std::pair<int, double>> out;
    double sum = 0.0;
    int mark = 0;
    for (int n = 1; n <= n_max && mark < 4; ++n) {
        sum += std::exp(-seq.log_term(n) / n);
        while (mark < 4 && n == marks[mark]) {
            out.emplace_back(n, sum);
            ++mark;
        }
    }
    return out;
}

QuasianalyticityVerdict classify(const CarlemanSequence& seq) {
    switch (seq.kind()) {
        case CarlemanSequence::Kind::Factorial:
            // Terms (n!)^(-1/n) ~ e/n: harmonic-type divergence.
            return QuasianalyticityVerdict::Quasianalytic;
        case CarlemanSequence::Kind::Gevrey:
            // Terms are exactly n^(-s): p-series, divergent iff s <= 1.
            return seq.gevrey_index() <= 1.0 ? QuasianalyticityVerdict::Quasianalytic
                                             : QuasianalyticityVerdict::NotQuasianalytic;
        case CarlemanSequence::Kind::Explicit:
            break;
    }

    const int len = seq.max_index();
    require_valid(seq, len);
    if (len < 16) return QuasianalyticityVerdict::Inconclusive;

    // Doubling increments I_j = S(2^{j+1}) - S(2^j). A divergent series of
    // regularly decaying terms keeps the increments from shrinking fast; a
    // convergent one drives the tail increment to zero.
    std::vector<double> increments;
    int k = 1;
    double sum_to_k = std::exp(-seq.log_term(1) / 1.0);
    while (2 * k <= len) {
        double inc = 0.0;
        for (int n = k + 1; n <= 2 * k; ++n) inc += std::exp(-seq.log_term(n) / n);
        increments.push_back(inc);
        sum_to_k += inc;
        k *= 2;
    }
    if (increments.size() < 3) return QuasianalyticityVerdict::Inconclusive;

    const double last = increments[increments.size() - 1];
    const double prev = increments[increments.size() - 2];
    if (last < 1e-6) return QuasianalyticityVerdict::NotQuasianalytic;
    if (prev > 0.0 && last / prev > 0.9) return QuasianalyticityVerdict::Quasianalytic;
    return QuasianalyticityVerdict::Inconclusive;
}

}  // namespace revflow
