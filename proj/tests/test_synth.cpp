#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cbkm/ground_truth.hpp"
#include "cbkm/pipeline.hpp"
#include "cbkm/synth.hpp"

using namespace cbkm;
using Catch::Approx;

namespace {

// Kolmogorov-Smirnov statistic against N(0, sigma).
double ks_statistic(std::vector<double> samples, double sigma) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-samples[i] / (sigma * std::numbers::sqrt2));
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / n));
    }
    return d;
}

} // namespace

TEST_CASE("generation is a pure function of the model", "[synth]") {
    CloseOpModel m;
    m.seed = 99;
    const auto a = gen_close_op(m);
    const auto b = gen_close_op(m);
    CHECK(a.vibration.samples == b.vibration.samples);
    CHECK(a.contact.voltage == b.contact.voltage);

    m.seed = 100;
    const auto c = gen_close_op(m);
    CHECK(a.vibration.samples != c.vibration.samples);
}

TEST_CASE("trajectory truths are deterministic and in-range", "[synth]") {
    DegradationModel deg;
    deg.n_ops = 200;
    deg.seed = 17;
    const auto a = trajectory_truths(deg);
    const auto b = trajectory_truths(deg);
    REQUIRE(a.size() == 200);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].t1_true_ms == b[i].t1_true_ms);
        CHECK(a[i].t2_true_ms == b[i].t2_true_ms);
        CHECK(a[i].t1_true_ms > 20.0);
        CHECK(a[i].t1_true_ms < 50.0);
        CHECK(a[i].t2_true_ms > 50.0);
        CHECK(a[i].t2_true_ms < 75.0);
        CHECK(a[i].t1_true_ms < a[i].t2_true_ms);
    }
}

TEST_CASE("stage means drift from 60 to 72 without decreasing", "[synth]") {
    DegradationModel deg;
    deg.n_ops = 500;
    double prev = 0.0;
    for (std::size_t i = 0; i < deg.n_ops; ++i) {
        const double m = t2_stage_mean(deg, i);
        CHECK(m >= prev);
        prev = m;
    }
    CHECK(t2_stage_mean(deg, 0) == Approx(60.0));
    CHECK(t2_stage_mean(deg, deg.n_ops - 1) == Approx(72.0));
}

TEST_CASE("wearing jitter grows beyond the stationary jitter", "[synth]") {
    DegradationModel deg;
    deg.n_ops = 2000;
    deg.seed = 23;
    const auto truths = trajectory_truths(deg);
    const auto split = stage_split(deg);

    const auto stage_residual_std = [&](std::size_t lo, std::size_t hi) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double r = truths[i].t2_true_ms - t2_stage_mean(deg, i);
            s += r;
            s2 += r * r;
        }
        const double n = static_cast<double>(hi - lo);
        const double mean = s / n;
        return std::sqrt(std::max(0.0, s2 / n - mean * mean));
    };

    const double stat = stage_residual_std(split.initiation_end, split.stationary_end);
    const double wear = stage_residual_std(split.stationary_end, deg.n_ops);
    CHECK(wear / stat >= 2.0);
}

TEST_CASE("interval between key moments grows over the lifetime", "[synth]") {
    DegradationModel deg;
    deg.n_ops = 400;
    deg.seed = 29;
    const auto truths = trajectory_truths(deg);
    const auto iv = [&](std::size_t i) { return truths[i].t2_true_ms - truths[i].t1_true_ms; };
    // compare stage averages
    double early = 0.0, late = 0.0;
    for (std::size_t i = 0; i < 50; ++i) early += iv(i);
    for (std::size_t i = deg.n_ops - 50; i < deg.n_ops; ++i) late += iv(i);
    CHECK(late / 50.0 - early / 50.0 > 4.0); // 22 -> 28 ms drift
}

TEST_CASE("pre-latch samples are Gaussian with the configured level", "[synth]") {
    CloseOpModel m;
    m.seed = 31;
    const auto op = gen_close_op(m);
    const auto n = static_cast<std::size_t>((m.t1_true_ms - 1.0) * m.fs_hz / 1000.0);
    REQUIRE(n >= 10000);
    std::vector<double> pre(op.vibration.samples.begin(),
                            op.vibration.samples.begin() + static_cast<std::ptrdiff_t>(n));
    const double d = ks_statistic(std::move(pre), m.noise_std);
    // alpha = 0.01 critical value
    CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("noise-free bursts are recovered within about a window", "[synth]") {
    CloseOpModel m;
    m.noise_std = 0.0;
    m.mech_vibration_std = 0.0;
    m.post_contact_std = 0.0;
    m.t1_true_ms = 38.0;
    m.t2_true_ms = 60.5;
    m.seed = 11;
    const auto op = gen_close_op(m);
    const RunConfig cfg;
    const auto row = process_operation(op.vibration, 0, cfg);
    REQUIRE(row.t1_ms.has_value());
    REQUIRE(row.t2_ms.has_value());
    // centered window plus the acausal zero-phase foot lead the onset by up
    // to ~1.1 ms when the baseline is silent
    CHECK(std::abs(*row.t1_ms - m.t1_true_ms) <= 1.25);
    CHECK(std::abs(*row.t2_ms - m.t2_true_ms) <= 1.25);
}

TEST_CASE("generated contact channel matches the injected moment", "[synth]") {
    CloseOpModel m;
    m.seed = 37;
    m.t2_true_ms = 63.3;
    m.t1_true_ms = 40.0;
    const auto op = gen_close_op(m);
    const auto tc = extract_closing_time(op.contact);
    REQUIRE(tc.t_c_ms.has_value());
    CHECK(*tc.t_c_ms == Approx(63.3).margin(1000.0 / m.fs_hz + 1e-9));
}

TEST_CASE("model validation", "[synth]") {
    CloseOpModel m;
    m.t1_true_ms = 70.0;
    m.t2_true_ms = 60.0;
    CHECK_THROWS_AS(gen_close_op(m), ConfigError);
    m = {};
    m.fs_hz = 0.0;
    CHECK_THROWS_AS(gen_close_op(m), ConfigError);
    m = {};
    m.noise_std = -1.0;
    CHECK_THROWS_AS(gen_close_op(m), ConfigError);

    DegradationModel d;
    d.initiation_fraction = 0.5;
    d.stationary_fraction = 0.5;
    d.wearing_fraction = 0.5;
    CHECK_THROWS_AS(trajectory_truths(d), ConfigError);
    d = {};
    d.t2_end_ms = d.t2_start_ms;
    CHECK_THROWS_AS(trajectory_truths(d), ConfigError);
    d = {};
    d.n_ops = 0;
    CHECK_THROWS_AS(trajectory_truths(d), ConfigError);
}

TEST_CASE("per-op substreams are independent", "[synth]") {
    DegradationModel deg;
    deg.n_ops = 3;
    deg.seed = 41;
    const CloseOpModel tmpl;
    const auto truths = trajectory_truths(deg);
    const auto a = gen_close_op(make_op_model(deg, tmpl, truths[0]));
    const auto b = gen_close_op(make_op_model(deg, tmpl, truths[1]));
    CHECK(a.vibration.samples != b.vibration.samples);
}
