#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace revflow {

/// A nondecreasing sequence of positive reals m_1, m_2, ... defining a
/// derivative-growth class. All arithmetic is carried out on log m_n so that
/// factorial-scale values remain representable for n in the thousands.
class CarlemanSequence {
  public:
    enum class Kind { Factorial, Gevrey, Explicit };

    static CarlemanSequence factorial();
    static CarlemanSequence gevrey(double s);  // m_n = n^(s n), s >= 1
    static CarlemanSequence explicit_values(std::vector<double> values);

    Kind kind() const { return kind_; }
    double gevrey_index() const { return gevrey_s_; }

    /// log(m_n), n >= 1. Throws std::out_of_range past the end of an
    /// explicit list.
    double log_term(int n) const;

    /// Largest n for which log_term is defined (INT_MAX for closed forms).
    int max_index() const;

    std::string describe() const;

  private:
    CarlemanSequence(Kind kind, double s, std::vector<double> values);

    Kind kind_;
    double gevrey_s_ = 0.0;
    std::vector<double> log_values_;
};

/// Finite-range report on the three regularity conditions: power-law growth,
/// ratio bound m_{n+1}/m_n <= n C^n, and convexity of log(m_n/n!).
struct RegularityReport {
    bool growth_ok = false;
    std::optional<double> ratio_constant;
    double convexity_min_second_difference = 0.0;
    int checked_up_to = 0;
    bool valid_sequence = false;

    bool all_pass(double tol) const {
        return valid_sequence && growth_ok && ratio_constant.has_value() &&
               convexity_min_second_difference >= -tol;
    }
};

enum class QuasianalyticityVerdict { Quasianalytic, NotQuasianalytic, Inconclusive };

std::string to_string(QuasianalyticityVerdict v);

/// Checks the three regularity conditions over n = 1..N (requires m_{N+1}).
/// The power-growth condition is tested on the tail n in [max(4, N/2), N]
/// against the fixed exponent ladder p in {1, 2, 4, 8}; a finite range can
/// only ever support, not prove, "faster than any power".
RegularityReport check_regularity(const CarlemanSequence& seq, int n_max, double tol);

/// Partial sums S_k = sum_{n<=k} m_n^(-1/n) at k in {N/8, N/4, N/2, N};
/// returns (k, S_k) pairs in increasing k.
std::vector<std::pair<int, double>> quasianalyticity_partial_sums(
    const CarlemanSequence& seq, int n_max);

/// Divergence test for sum m_n^(-1/n). Closed forms decide Factorial and
/// Gevrey; explicit lists go through a doubling-increment heuristic that
/// returns Inconclusive rather than guess.
QuasianalyticityVerdict classify(const CarlemanSequence& seq);

}  // namespace revflow
