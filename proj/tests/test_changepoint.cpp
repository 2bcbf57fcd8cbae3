#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cbkm/changepoint.hpp"
#include "cbkm/oracle.hpp"
#include "cbkm/synth.hpp"

using namespace cbkm;
using Catch::Approx;

TEST_CASE("segment cost basics", "[changepoint]") {
    CHECK(cost_l2({5.0, 5.0, 5.0, 5.0}, 0, 4) == 0.0);
    // two-sample segment: mean over both, sum over the tail only
    CHECK(cost_l2({0.0, 2.0}, 0, 2) == Approx(1.0));
    CHECK_THROWS_AS(cost_l2({1.0, 2.0}, 1, 1), ConfigError);
    CHECK_THROWS_AS(cost_l2({1.0, 2.0}, 0, 3), ConfigError);
    // single-sample segment has an empty tail
    CHECK(cost_l2({1.0, 2.0, 3.0}, 1, 2) == 0.0);
}

TEST_CASE("prefix-sum cost equals the naive two-pass computation", "[changepoint]") {
    std::size_t cases = 0;
    for (std::uint64_t c = 0; c < 1000; ++c) {
        rng::Gaussian g(rng::substream_seed(31, c));
        const std::size_t n = 20 + (c % 180);
        std::vector<double> s(n);
        for (auto& v : s) v = 3.0 + g.next();
        CostL2Cache cache(s);
        const std::size_t a = c % (n / 2);
        const std::size_t b = a + 2 + (c % (n - a - 1));
        const double fast = cache.cost(a, b);
        const double ref = oracle::cost_l2_naive(s, a, b);
        REQUIRE(std::abs(fast - ref) <= 1e-9 * std::max(std::abs(ref), 1e-300));
        ++cases;
    }
    CHECK(cases == 1000);
}

TEST_CASE("cost is zero only for constant segments", "[changepoint]") {
    for (std::uint64_t c = 0; c < 50; ++c) {
        rng::Gaussian g(rng::substream_seed(37, c));
        std::vector<double> s(30);
        for (auto& v : s) v = g.next();
        CHECK(cost_l2(s, 0, s.size()) > 0.0);
    }
}

TEST_CASE("cost splitting never increases the total beyond the edge term", "[changepoint]") {
    // With the summation starting one past the segment head while the mean
    // covers the whole segment, plain additivity can be violated by up to
    // the head sample's squared deviation; splitting never gains more.
    for (std::uint64_t c = 0; c < 100; ++c) {
        rng::Gaussian g(rng::substream_seed(41, c));
        const std::size_t n = 12 + (c % 60);
        std::vector<double> s(n);
        for (auto& v : s) v = g.next() + ((c % 2) ? 2.0 : 0.0);
        CostL2Cache cache(s);
        const double whole = cache.cost(0, n);
        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= static_cast<double>(n);
        const double head = (s[0] - mean) * (s[0] - mean);
        for (std::size_t t = 1; t + 1 < n; ++t) {
            CHECK(cache.cost(0, t) + cache.cost(t, n) <=
                  whole + head + 1e-12 * std::max(1.0, whole));
        }
    }
    // and exactly zero cost splits into exactly zero costs
    const std::vector<double> flat(20, 3.0);
    CostL2Cache cache(flat);
    CHECK(cache.cost(0, 20) == 0.0);
    CHECK(cache.cost(0, 9) + cache.cost(9, 20) == 0.0);
}

TEST_CASE("single split on a clean step", "[changepoint]") {
    const std::vector<double> s{0.0, 0.0, 0.0, 1.0, 1.0, 1.0};
    const auto r = binseg_single(s, 1000.0, 0, s.size());
    CHECK(r.split_index == 3);
    CHECK(r.cost_at_split == 0.0);
    CHECK_FALSE(r.no_signal);
    CHECK(r.t_cp_ms == Approx(3.0));
}

TEST_CASE("single split tie-break on constant input", "[changepoint]") {
    const std::vector<double> s(16, 4.0);
    const auto r = binseg_single(s, 1000.0, 0, s.size());
    CHECK(r.split_index == 1);
    CHECK(r.no_signal);
}

TEST_CASE("single split matches exhaustive evaluation", "[changepoint]") {
    for (std::uint64_t c = 0; c < 300; ++c) {
        rng::Gaussian g(rng::substream_seed(43, c));
        const std::size_t n = 8 + (c % 190);
        const std::size_t jump = 1 + (c % (n - 2));
        const double step = (c % 3 == 0) ? 0.0 : 1.5 + g.next();
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = (i >= jump ? step : 0.0) + 0.3 * g.next();
        const auto fast = binseg_single(s, 1000.0, 0, n);
        const auto ref = oracle::binseg_exhaustive(s, 0, n);
        REQUIRE(fast.split_index == ref);
    }
}

TEST_CASE("single split finds noiseless steps exactly", "[changepoint]") {
    for (double h : {0.1, 1.0, 10.0}) {
        for (std::size_t at : {std::size_t{5}, std::size_t{37}, std::size_t{90}}) {
            std::vector<double> s(120, 0.0);
            for (std::size_t i = at; i < s.size(); ++i) s[i] = h;
            const auto r = binseg_single(s, 1000.0, 0, s.size());
            CHECK(r.split_index == at);
        }
    }
}

TEST_CASE("single split is invariant under affine transforms", "[changepoint]") {
    rng::Gaussian g(47);
    std::vector<double> s(150);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (i >= 70 ? 2.0 : 0.0) + 0.4 * g.next();
    const auto base = binseg_single(s, 1000.0, 0, s.size());
    for (auto [alpha, beta] : {std::pair{2.5, 7.0}, std::pair{-1.0, 0.0}, std::pair{0.125, -3.0}}) {
        std::vector<double> t(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) t[i] = alpha * s[i] + beta;
        CHECK(binseg_single(t, 1000.0, 0, t.size()).split_index == base.split_index);
    }
}

TEST_CASE("single split range validation", "[changepoint]") {
    const std::vector<double> s(10, 1.0);
    CHECK_THROWS_AS(binseg_single(s, 1000.0, 4, 6), ConfigError);
    CHECK_THROWS_AS(binseg_single(s, 1000.0, 5, 5), ConfigError);
    CHECK_THROWS_AS(binseg_single(s, 1000.0, 0, 11), ConfigError);
    // smallest admissible range has exactly one candidate
    const auto r = binseg_single(s, 1000.0, 3, 6);
    CHECK(r.split_index == 4);
}

TEST_CASE("sliding-window split on a clean step", "[changepoint]") {
    const std::vector<double> s{0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0};
    const auto r = window_single(s, 1000.0, 0, s.size(), 3);
    CHECK(r.split_index == 4);
    CHECK_FALSE(r.no_signal);
}

TEST_CASE("sliding-window split flags constant input", "[changepoint]") {
    const std::vector<double> s(20, 2.5);
    const auto r = window_single(s, 1000.0, 0, s.size(), 4);
    CHECK(r.split_index == 4); // smallest admissible
    CHECK(r.no_signal);
}

TEST_CASE("sliding-window gain scales quadratically with step height", "[changepoint]") {
    const auto gain_for = [](double h) {
        std::vector<double> s(40, 0.0);
        for (std::size_t i = 20; i < 40; ++i) s[i] = h;
        return window_single(s, 1000.0, 0, s.size(), 10).cost_at_split;
    };
    CHECK(gain_for(2.0) / gain_for(1.0) == Approx(4.0).epsilon(1e-6));
}

TEST_CASE("sliding-window split validation and exhaustive agreement", "[changepoint]") {
    const std::vector<double> s(10, 1.0);
    CHECK_THROWS_AS(window_single(s, 1000.0, 0, 10, 6), ConfigError);
    CHECK_THROWS_AS(window_single(s, 1000.0, 0, 10, 0), ConfigError);

    for (std::uint64_t c = 0; c < 100; ++c) {
        rng::Gaussian g(rng::substream_seed(53, c));
        const std::size_t n = 30 + (c % 120);
        const std::size_t w = 4 + (c % 10);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = (i >= n / 2 ? 1.0 : 0.0) + 0.3 * g.next();
        const auto fast = window_single(v, 1000.0, 0, n, w);
        CHECK(fast.split_index == oracle::window_exhaustive(v, 0, n, w));
    }
}

TEST_CASE("bottom-up split on a clean step", "[changepoint]") {
    const std::vector<double> s{0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0};
    const auto r = bottomup_single(s, 1000.0, 0, s.size(), 2);
    CHECK(r.split_index == 4);
    CHECK_FALSE(r.no_signal);
}

TEST_CASE("bottom-up split flags constant input", "[changepoint]") {
    const std::vector<double> s(24, 1.0);
    const auto r = bottomup_single(s, 1000.0, 0, s.size(), 4);
    CHECK(r.no_signal);
}

TEST_CASE("bottom-up with unit grid matches the single split on steps", "[changepoint]") {
    for (std::uint64_t c = 0; c < 10; ++c) {
        const std::size_t n = 40 + static_cast<std::size_t>(c) * 7;
        const std::size_t at = 10 + static_cast<std::size_t>(c) * 3;
        std::vector<double> s(n, 0.0);
        for (std::size_t i = at; i < n; ++i) s[i] = 1.0 + 0.1 * static_cast<double>(c);
        const auto bu = bottomup_single(s, 1000.0, 0, n, 1);
        const auto bs = binseg_single(s, 1000.0, 0, n);
        CHECK(bu.split_index == bs.split_index);
        CHECK(bu.split_index == at);
    }
}

TEST_CASE("bottom-up validation", "[changepoint]") {
    const std::vector<double> s(10, 1.0);
    CHECK_THROWS_AS(bottomup_single(s, 1000.0, 0, 10, 5), ConfigError);
    CHECK_THROWS_AS(bottomup_single(s, 1000.0, 0, 10, 0), ConfigError);
}

TEST_CASE("change point lies strictly inside the range", "[changepoint]") {
    for (std::uint64_t c = 0; c < 40; ++c) {
        rng::Gaussian g(rng::substream_seed(59, c));
        std::vector<double> s(200);
        for (auto& v : s) v = g.next();
        const std::size_t lo = 10, hi = 190;
        const auto r = binseg_single(s, 1000.0, lo, hi);
        CHECK(r.split_index > lo);
        CHECK(r.split_index < hi);
    }
}
