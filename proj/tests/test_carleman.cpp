#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "revflow/carleman.hpp"

using namespace revflow;

namespace {

// Independent Stirling-series oracle for sum (n!)^(-1/n): uses
// ln n! = n ln n - n + ln(2 pi n)/2 + 1/(12 n) - 1/(360 n^3) + ...
double stirling_tail(int from, int to) {
    double s = 0.0;
    for (int n = from; n <= to; ++n) {
        const double ln_fact = n * std::log(static_cast<double>(n)) - n +
                               0.5 * std::log(2.0 * 3.14159265358979323846 * n) +
                               1.0 / (12.0 * n);
        s += std::exp(-ln_fact / n);
    }
    return s;
}

}  // namespace

TEST_CASE("factorial and Gevrey sequences pass all regularity conditions") {
    for (int n_max : {10, 50, 200}) {
        const auto rep_fact = check_regularity(CarlemanSequence::factorial(), n_max, 1e-9);
        CHECK(rep_fact.all_pass(1e-9));
        for (double s : {1.0, 1.5, 2.0, 3.0}) {
            const auto rep = check_regularity(CarlemanSequence::gevrey(s), n_max, 1e-9);
            CHECK(rep.all_pass(1e-9));
        }
    }
}

TEST_CASE("decreasing explicit sequence is rejected") {
    std::vector<double> vals;
    for (int n = 1; n <= 60; ++n) vals.push_back(1.0 / n);
    const auto seq = CarlemanSequence::explicit_values(vals);
    CHECK_THROWS_AS(check_regularity(seq, 50, 1e-9), std::invalid_argument);
}

TEST_CASE("non-positive sequence values are rejected at construction") {
    CHECK_THROWS_AS(CarlemanSequence::explicit_values({1.0, 0.0, 2.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(CarlemanSequence::explicit_values({1.0, -3.0}),
                    std::invalid_argument);
}

TEST_CASE("factorial partial sums: doubling increments stay above 1.5") {
    // (n!)^(-1/n) ~ e/n, so S_2k - S_k tends to e ln 2 = 1.9326...
    const auto sums = quasianalyticity_partial_sums(CarlemanSequence::factorial(), 1024);
    REQUIRE(sums.size() == 4);
    CHECK(sums[0].first == 128);
    CHECK(sums[3].first == 1024);
    for (std::size_t i = 0; i + 1 < sums.size(); ++i) {
        const double increment = sums[i + 1].second - sums[i].second;
        CHECK(increment >= 1.5);
        // Independent Stirling oracle for the same block of terms.
        const double oracle = stirling_tail(sums[i].first + 1, sums[i + 1].first);
        CHECK(increment == doctest::Approx(oracle).epsilon(1e-6));
    }
}

TEST_CASE("Gevrey s=2 partial sums stay below pi^2/6") {
    const auto sums = quasianalyticity_partial_sums(CarlemanSequence::gevrey(2.0), 4096);
    const double zeta2 = 3.14159265358979323846 * 3.14159265358979323846 / 6.0;
    for (const auto& [k, sk] : sums) {
        (void)k;
        CHECK(sk < zeta2);
    }
}

TEST_CASE("Gevrey s=1 harmonic doubling increment stays above 0.6") {
    const auto sums = quasianalyticity_partial_sums(CarlemanSequence::gevrey(1.0), 1024);
    for (std::size_t i = 0; i + 1 < sums.size(); ++i)
        CHECK(sums[i + 1].second - sums[i].second >= 0.6);  // ln 2 = 0.693...
}

TEST_CASE("partial sums are nondecreasing in k for every built-in family") {
    for (const auto& seq :
         {CarlemanSequence::factorial(), CarlemanSequence::gevrey(1.0),
          CarlemanSequence::gevrey(2.5)}) {
        const auto sums = quasianalyticity_partial_sums(seq, 256);
        for (std::size_t i = 0; i + 1 < sums.size(); ++i)
            CHECK(sums[i].second <= sums[i + 1].second);
    }
}

TEST_CASE("classification: divergence criterion on the built-in families") {
    CHECK(classify(CarlemanSequence::factorial()) ==
          QuasianalyticityVerdict::Quasianalytic);
    CHECK(classify(CarlemanSequence::gevrey(1.0)) ==
          QuasianalyticityVerdict::Quasianalytic);
    CHECK(classify(CarlemanSequence::gevrey(2.0)) ==
          QuasianalyticityVerdict::NotQuasianalytic);
}

TEST_CASE("Gevrey classification flips exactly at s = 1") {
    for (double s : {1.0, 1.0 + 1e-12, 1.2, 5.0}) {
        const auto verdict = classify(CarlemanSequence::gevrey(s));
        if (s <= 1.0)
            CHECK(verdict == QuasianalyticityVerdict::Quasianalytic);
        else
            CHECK(verdict == QuasianalyticityVerdict::NotQuasianalytic);
    }
}

TEST_CASE("explicit sequences: trend heuristic and inconclusive fallback") {
    // Divergence-like: m_n = n^n, terms n^(-1) (stays finite up to n = 120).
    std::vector<double> divergent;
    for (int n = 1; n <= 120; ++n)
        divergent.push_back(std::pow(static_cast<double>(n), n));
    CHECK(classify(CarlemanSequence::explicit_values(divergent)) ==
          QuasianalyticityVerdict::Quasianalytic);

    // Convergence-like: m_n = n^(8n), terms n^(-8) whose Cauchy tail falls
    // under the 1e-6 threshold within the representable range.
    std::vector<double> convergent;
    for (int n = 1; n <= 26; ++n)
        convergent.push_back(
            std::exp(8.0 * n * std::log(static_cast<double>(n))));
    CHECK(classify(CarlemanSequence::explicit_values(convergent)) ==
          QuasianalyticityVerdict::NotQuasianalytic);

    // Slow p-series decay on a short range: neither trend fires, and the
    // classifier must not pretend to know.
    std::vector<double> ambiguous;
    for (int n = 1; n <= 50; ++n)
        ambiguous.push_back(
            std::exp(3.0 * n * std::log(static_cast<double>(n))));
    CHECK(classify(CarlemanSequence::explicit_values(ambiguous)) ==
          QuasianalyticityVerdict::Inconclusive);

    // Too short for any trend to fire.
    CHECK(classify(CarlemanSequence::explicit_values({1, 2, 6, 24, 120})) ==
          QuasianalyticityVerdict::Inconclusive);
}
