#include <cmath>

#include "doctest.h"
#include "qising/bounds.hpp"
#include "qising/rng.hpp"

using namespace qising::bounds;

namespace {
constexpr double kLn2 = 0.6931471805599453;

// Independent route to the tail sum: long double descending summation with a
// crude integral-comparison bracket, f(x) = (c/x^xi) * (xi log2 x - log2 c).
long double tail_sum_oracle(long double c, long double xi, long double nu) {
    const long double a = c * xi / std::log(2.0L);
    const long double b = -c * std::log(c) / std::log(2.0L);
    auto f = [&](long double x) { return std::pow(x, -xi) * (a * std::log(x) + b); };
    auto integral = [&](long double x) {
        const long double s = xi - 1;
        return std::pow(x, -s) * ((a * std::log(x) + b) / s + a / (s * s));
    };
    const long double j_end = 2e6L;
    long double sum = 0;
    for (long double j = j_end - 1; j > nu; j -= 1) sum += f(j);
    // integral comparison for a decreasing summand:
    //   int_J^inf f <= sum_{j>=J} f(j) <= f(J) + int_J^inf f
    return sum + integral(j_end) + f(j_end) / 2;
}
}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("constant_a closed form and limits") {
    CHECK(constant_a(1.0, 1.0) == doctest::Approx(1.0 / 36.0).epsilon(1e-15));
    CHECK(constant_a(1e-12, 1.0) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(constant_a(1.0, 1e12) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK_THROWS_AS(constant_a(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(constant_a(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("disorder_product reduces to powers of sqrt(A)") {
    SiteSeq lambda{-5, std::vector<double>(12, 0.7)};
    SiteSeq delta{-5, std::vector<double>(12, 1.3)};
    const double root_a = std::sqrt(constant_a(0.7, 1.3));
    for (int k : {0, 1, 2, 5}) {
        const double expect = std::pow(root_a, k);
        CHECK(disorder_product(-2, k, lambda, delta) == doctest::Approx(expect).epsilon(1e-13));
    }
    CHECK(disorder_product(0, 0, lambda, delta) == 1.0);
    CHECK_THROWS_AS(disorder_product(3, 5, lambda, delta), std::out_of_range);
}

TEST_CASE("disorder_product decreases when any coupling grows") {
    SiteSeq lambda{0, {0.5, 0.5, 0.5, 0.5, 0.5}};
    SiteSeq delta{0, {1.0, 1.0, 1.0, 1.0, 1.0, 1.0}};
    const double base = disorder_product(0, 3, lambda, delta);
    for (int i = 0; i < 4; ++i) {
        SiteSeq bumped = lambda;
        bumped.values[i] += 0.3;
        CHECK(disorder_product(0, 3, bumped, delta) < base);
    }
}

TEST_CASE("check_disorder_condition") {
    SiteSeq lambda{0, {0.5, 0.5, 0.5}};
    SiteSeq delta{0, {1.0, 1.0, 1.0, 1.0}};
    auto res = check_disorder_condition(lambda, delta, 0.5, 1.0);
    CHECK(res.ok);
    CHECK(res.worst_ratio == doctest::Approx(0.5));

    SiteSeq halved = delta;
    halved.values[1] = 0.5;  // ratio at site 1 becomes 1.0 > theta
    res = check_disorder_condition(lambda, halved, 0.5, 1.0);
    CHECK_FALSE(res.ok);
    CHECK(res.worst_site == 1);
    CHECK(res.worst_ratio == doctest::Approx(1.0));

    SiteSeq empty_window{10, {}};
    res = check_disorder_condition(lambda, empty_window, 0.5, 1.0);
    CHECK(res.ok);  // vacuous
    CHECK(res.n_checked == 0);
}

TEST_CASE("r_k values") {
    CHECK(r_k(1.0, 2.0 * kLn2, 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(r_k(3.0, 1.0, 200) < 1e-40);
    const double r1 = r_k(1.0, 1.0, 3), r2 = r_k(1.0, 1.0, 6);
    CHECK(r2 == doctest::Approx(r1 * r1).epsilon(1e-13));
}

TEST_CASE("envelope") {
    auto [lo, hi] = envelope(1.0 / 36.0, 1, 0.0);
    CHECK(lo == doctest::Approx(1.0 / 1296.0).epsilon(1e-14));
    CHECK(hi == doctest::Approx(1296.0).epsilon(1e-14));

    auto [lo2, hi2] = envelope(0.2, 2, 0.5);
    CHECK(lo2 == doctest::Approx(std::pow(0.2, 4) * 0.5));
    CHECK(hi2 == doctest::Approx(1.5 / std::pow(0.2, 4)));
    CHECK(lo2 <= 1.0);
    CHECK(hi2 >= 1.0);
    CHECK_THROWS_AS(envelope(0.2, 2, 0.6), std::domain_error);
}

TEST_CASE("choose_k examples and bracketing sweep") {
    CHECK(choose_k(1.0, 1.0) == 2);
    CHECK(choose_k(std::exp(4.0), 1.0) == 4);
    CHECK(choose_k(std::exp(4.5), 1.0) == 5);

    qising::Rng rng(20240817);
    for (int trial = 0; trial < 1000; ++trial) {
        const double c = std::exp(rng.uniform(-2.0, 30.0));
        const double gamma = rng.uniform(0.05, 5.0);
        const int k = choose_k(c, gamma);
        CHECK(k >= 2);
        CHECK(c * std::exp(-gamma * k) <= 1.0);
        if (k > 2) CHECK(c * std::exp(-gamma * (k - 1)) > 1.0);
    }
}

TEST_CASE("entropy_bound at gamma = 4 ln 2") {
    const double gamma = 4.0 * kLn2;
    const auto eb = entropy_bound(1.0, gamma);
    CHECK(eb.K == 2);
    CHECK(eb.xi == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(eb.c == doctest::Approx(4096.0 * 16.0 / 15.0).epsilon(1e-12));
    CHECK(eb.nu == doctest::Approx(256.0));
    CHECK(eb.c1_remainder < 1e-9);
    CHECK(eb.bound == doctest::Approx(2.0 * 4 + eb.c1));

    const long double oracle = tail_sum_oracle(4096.0L * 16.0L / 15.0L, 2.0L, 256.0L);
    CHECK(std::abs(eb.c1 - static_cast<double>(oracle)) < 1e-6);
}

TEST_CASE("entropy_bound rejects the boundary and below") {
    CHECK_THROWS_AS(entropy_bound(1.0, 2.0 * kLn2), std::domain_error);
    CHECK_THROWS_AS(entropy_bound(1.0, 1.0), std::domain_error);
    CHECK(entropy_bound(1.0, 4.0 * kLn2).xi == doctest::Approx(2.0));
}

TEST_CASE("tail sum doubled precision agreement") {
    for (double gamma : {1.6, 2.0, 4.0 * kLn2, 3.5}) {
        const auto eb = entropy_bound(1.0, gamma);
        const auto ld = entropy_tail_sum<long double>(
            static_cast<long double>(eb.c), static_cast<long double>(eb.xi),
            static_cast<long double>(eb.nu), 1e-10L);
        CHECK(std::abs(eb.c1 - static_cast<double>(ld.value)) < 1e-6);
    }
}

TEST_CASE("entropy_bound monotone in gamma") {
    for (double c_pref : {1.0, 20.0, std::exp(9.0)}) {
        double prev_c1 = INFINITY;
        int prev_k = 1 << 20;
        for (double gamma = 1.45; gamma < 4.5; gamma += 0.05) {
            const auto eb = entropy_bound(c_pref, gamma);
            CHECK(eb.K <= prev_k);
            CHECK(eb.c1 <= prev_c1 * (1.0 + 1e-12));
            prev_c1 = eb.c1;
            prev_k = eb.K;
        }
    }
}

TEST_CASE("gamma fractions") {
    const auto f = gamma_fractions(2.1);
    CHECK(f.third == doctest::Approx(0.7));
    CHECK(f.two_sevenths == doctest::Approx(0.6));
    CHECK(f.half == doctest::Approx(1.05));
}

}  // TEST_SUITE
