#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cbkm/ground_truth.hpp"
#include "cbkm/synth.hpp"

using namespace cbkm;
using Catch::Approx;

namespace {

constexpr double kFs = 300000.0;

ContactChannel step_channel(double level, double drop_at_ms, double length_ms = 200.0) {
    ContactChannel ch;
    ch.sampling_rate_hz = kFs;
    const auto n = static_cast<std::size_t>(std::llround(length_ms * kFs / 1000.0));
    const auto k = static_cast<std::size_t>(std::llround(drop_at_ms * kFs / 1000.0));
    ch.voltage.assign(n, level);
    for (std::size_t i = k; i < n; ++i) ch.voltage[i] = 0.0;
    return ch;
}

} // namespace

TEST_CASE("closing time from a clean 9 V drop", "[ground_truth]") {
    const auto ch = step_channel(9.0, 60.0);
    const auto tc = extract_closing_time(ch);
    REQUIRE(tc.t_c_ms.has_value());
    CHECK(*tc.t_c_ms == Approx(60.0).margin(1000.0 / kFs + 1e-12));
}

TEST_CASE("channel that never drops yields no closing time", "[ground_truth]") {
    ContactChannel ch;
    ch.sampling_rate_hz = kFs;
    ch.voltage.assign(60000, 9.0);
    const auto tc = extract_closing_time(ch);
    CHECK_FALSE(tc.t_c_ms.has_value());
}

TEST_CASE("dead or already-closed channels are rejected", "[ground_truth]") {
    ContactChannel ch;
    ch.sampling_rate_hz = kFs;
    ch.voltage.assign(60000, 0.0);
    CHECK_THROWS_AS(extract_closing_time(ch), DataError);

    // plateau at ~0 with later activity
    ch.voltage.assign(60000, 0.0);
    for (std::size_t i = 30000; i < 60000; ++i) ch.voltage[i] = 9.0;
    CHECK_THROWS_AS(extract_closing_time(ch), DataError);

    ContactChannel empty;
    empty.sampling_rate_hz = kFs;
    CHECK_THROWS_AS(extract_closing_time(empty), DataError);

    // record shorter than the 1 ms plateau minimum
    ContactChannel tiny;
    tiny.sampling_rate_hz = kFs;
    tiny.voltage.assign(100, 9.0);
    CHECK_THROWS_AS(extract_closing_time(tiny), DataError);
}

TEST_CASE("closing time is invariant to positive rescaling", "[ground_truth]") {
    const auto ch = step_channel(9.0, 61.7);
    auto scaled = ch;
    for (auto& v : scaled.voltage) v *= 2.5;
    const auto a = extract_closing_time(ch);
    const auto b = extract_closing_time(scaled);
    REQUIRE(a.t_c_ms.has_value());
    REQUIRE(b.t_c_ms.has_value());
    CHECK(*a.t_c_ms == *b.t_c_ms);
}

TEST_CASE("lowering the drop fraction never gives an earlier closing time", "[ground_truth]") {
    // a sloped fall so different fractions cross at different samples
    ContactChannel ch;
    ch.sampling_rate_hz = kFs;
    ch.voltage.assign(60000, 9.0);
    const std::size_t start = 18000;
    const std::size_t fall = 3000; // 10 ms ramp
    for (std::size_t i = start; i < start + fall; ++i)
        ch.voltage[i] = 9.0 * (1.0 - static_cast<double>(i - start) / fall);
    for (std::size_t i = start + fall; i < ch.voltage.size(); ++i) ch.voltage[i] = 0.0;

    double prev = -1.0;
    for (double frac : {0.9, 0.7, 0.5, 0.3, 0.1}) {
        const auto tc = extract_closing_time(ch, frac);
        REQUIRE(tc.t_c_ms.has_value());
        CHECK(*tc.t_c_ms >= prev);
        prev = *tc.t_c_ms;
    }
}

TEST_CASE("closing time of a sharp drop is independent of the fraction", "[ground_truth]") {
    const auto ch = step_channel(9.0, 64.2);
    const auto base = extract_closing_time(ch, 0.5);
    REQUIRE(base.t_c_ms.has_value());
    for (double frac : {0.1, 0.3, 0.7, 0.9}) {
        const auto tc = extract_closing_time(ch, frac);
        REQUIRE(tc.t_c_ms.has_value());
        CHECK(*tc.t_c_ms == *base.t_c_ms);
    }
}

TEST_CASE("extraction parameter validation", "[ground_truth]") {
    const auto ch = step_channel(9.0, 60.0);
    CHECK_THROWS_AS(extract_closing_time(ch, 0.0), ConfigError);
    CHECK_THROWS_AS(extract_closing_time(ch, 1.0), ConfigError);
    CHECK_THROWS_AS(extract_closing_time(ch, 0.5, 0.0), ConfigError);
}

TEST_CASE("contact bounce after the first touch is ignored", "[ground_truth]") {
    auto ch = step_channel(9.0, 60.0);
    // re-opening blip 2 ms after the first touch
    const std::size_t blip = 18600;
    for (std::size_t i = blip; i < blip + 300; ++i) ch.voltage[i] = 9.0;
    const auto tc = extract_closing_time(ch);
    REQUIRE(tc.t_c_ms.has_value());
    CHECK(*tc.t_c_ms == Approx(60.0).margin(1000.0 / kFs + 1e-12));
}

TEST_CASE("generated contact channels reproduce the injected contact moment", "[ground_truth]") {
    DegradationModel deg;
    deg.n_ops = 20;
    deg.seed = 3;
    const CloseOpModel tmpl;
    const auto truths = trajectory_truths(deg);
    for (const auto& t : truths) {
        const auto op = gen_close_op(make_op_model(deg, tmpl, t));
        const auto tc = extract_closing_time(op.contact);
        REQUIRE(tc.t_c_ms.has_value());
        CHECK(*tc.t_c_ms == Approx(t.t2_true_ms).margin(1000.0 / kFs + 1e-9));
    }
}
