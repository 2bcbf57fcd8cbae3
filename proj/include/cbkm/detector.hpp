#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cbkm/errors.hpp"
#include "cbkm/waveform.hpp"

namespace cbkm {

/// Moving-threshold detector hyperparameters. Times are milliseconds from
/// the trigger; L_points counts samples. sigma_floor left unset defaults to
/// 1e-12 times the largest envelope value inside the detection interval
/// (plus a denormal-scale absolute floor), so a constant envelope never
/// fires. reset_run_on_below toggles the consecutive-points reading of the
/// tolerance counter; the non-resetting variant is kept for comparison
/// experiments.
struct DetectorConfig {
    double t_start_ms = 0.0;
    double t_end_ms = 0.0;
    double t0_ms = 0.0;
    std::size_t L_points = 300;
    std::size_t ste_window = 600;
    std::optional<double> sigma_floor;
    double threshold_multiplier = 3.0;
    bool reset_run_on_below = true;
};

/// Defaults for the latch-release moment.
inline DetectorConfig t1_config() {
    DetectorConfig c;
    c.t_start_ms = 20.0;
    c.t_end_ms = 50.0;
    c.t0_ms = 10.0;
    c.L_points = 300;
    return c;
}

/// Defaults for the contact-touch moment.
inline DetectorConfig t2_config() {
    DetectorConfig c;
    c.t_start_ms = 50.0;
    c.t_end_ms = 75.0;
    c.t0_ms = 10.0;
    c.L_points = 300;
    return c;
}

/// Walking state of the moving-threshold scan: expanding-baseline
/// statistics, the current above-threshold run and the scan position (all
/// in cropped-sample coordinates).
struct DetectorState {
    double baseline_mean = 0.0;
    double baseline_std = 0.0;
    std::size_t run_length = 0;
    std::size_t cursor = 0;
};

/// Detected key moments in milliseconds from the trigger. An absent value
/// means no detection (serialized as -1 in reports).
struct KeyMoments {
    std::optional<double> t1_ms;
    std::optional<double> t2_ms;

    /// True when both moments are present but out of the expected order.
    /// Flagged as a warning by callers, never an error.
    bool ordering_suspect() const { return t1_ms && t2_ms && !(*t1_ms < *t2_ms); }
};

inline void validate_detector_config(const DetectorConfig& cfg) {
    if (!(cfg.t_start_ms >= 0.0) || !(cfg.t_start_ms < cfg.t_end_ms))
        throw ConfigError("detector: need 0 <= t_start_ms < t_end_ms");
    if (!(cfg.t0_ms > 0.0) || !(cfg.t0_ms < cfg.t_end_ms - cfg.t_start_ms))
        throw ConfigError("detector: need 0 < t0_ms < t_end_ms - t_start_ms");
    if (cfg.L_points < 1) throw ConfigError("detector: L_points must be >= 1");
    if (cfg.sigma_floor && *cfg.sigma_floor < 0.0)
        throw ConfigError("detector: sigma_floor must be non-negative");
    if (!(cfg.threshold_multiplier > 0.0))
        throw ConfigError("detector: threshold_multiplier must be positive");
}

/// Moving-threshold detection on the energy envelope.
///
/// The envelope is cropped to [t_start_ms, t_end_ms). Baseline mean and
/// population standard deviation start over the first t0 samples of the
/// crop and expand: a sample within threshold_multiplier * max(sigma,
/// sigma_floor) of the mean extends the baseline up to (excluding) itself
/// and resets the run counter; a sample at or beyond the threshold freezes
/// the baseline and increments the counter. Once the counter exceeds
/// L_points at cropped index t, the key moment is t - counter, converted to
/// absolute milliseconds. Returns nullopt when the interval is exhausted.
///
/// Baseline statistics are kept as running count / sum / sum-of-squares
/// (append only, ascending), so they match a recompute-from-scratch
/// left-to-right summation bit for bit.
inline std::optional<double> detect_key_moment(const SteSeries& ste, const DetectorConfig& cfg) {
    validate_detector_config(cfg);
    if (ste.values.empty()) throw DataError("detect_key_moment: empty envelope");
    if (!(ste.sampling_rate_hz > 0.0))
        throw DataError("detect_key_moment: envelope needs a positive sampling rate");

    const double fs = ste.sampling_rate_hz;
    const auto clamp_index = [&](std::ptrdiff_t i) {
        return static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(std::max<std::ptrdiff_t>(i, 0),
                                     static_cast<std::ptrdiff_t>(ste.values.size())));
    };
    const std::size_t crop_begin = clamp_index(ste.index_at_ms(cfg.t_start_ms));
    const std::size_t crop_end = clamp_index(ste.index_at_ms(cfg.t_end_ms));
    if (crop_end <= crop_begin) throw ConfigError("detect_key_moment: empty detection interval");
    const std::size_t n = crop_end - crop_begin;
    const double* s = ste.values.data() + crop_begin;

    const std::size_t t0 = static_cast<std::size_t>(std::llround(cfg.t0_ms * fs / 1000.0));
    if (t0 < 1 || t0 >= n)
        throw ConfigError("detect_key_moment: detection interval shorter than t0");

    double floor_value;
    if (cfg.sigma_floor) {
        floor_value = *cfg.sigma_floor;
    } else {
        double peak = 0.0;
        for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(s[i]));
        floor_value = std::max(1e-12 * peak, std::numeric_limits<double>::min());
    }

    // Baseline accumulators over s[0 : base_end).
    std::size_t base_end = 0;
    double sum = 0.0, sum_sq = 0.0;
    const auto extend_baseline = [&](std::size_t upto) {
        for (; base_end < upto; ++base_end) {
            sum += s[base_end];
            sum_sq += s[base_end] * s[base_end];
        }
    };
    const auto stats = [&]() -> std::pair<double, double> {
        const double mean = sum / static_cast<double>(base_end);
        const double var = sum_sq / static_cast<double>(base_end) - mean * mean;
        return {mean, std::sqrt(std::max(0.0, var))};
    };

    extend_baseline(t0);
    DetectorState state;
    std::tie(state.baseline_mean, state.baseline_std) = stats();

    for (state.cursor = t0; state.cursor < n; ++state.cursor) {
        const double dev = std::abs(s[state.cursor] - state.baseline_mean);
        if (dev >= cfg.threshold_multiplier * std::max(state.baseline_std, floor_value)) {
            ++state.run_length;
        } else {
            extend_baseline(state.cursor);
            std::tie(state.baseline_mean, state.baseline_std) = stats();
            if (cfg.reset_run_on_below) state.run_length = 0;
        }
        if (state.run_length > cfg.L_points) {
            const std::size_t moment = state.cursor - state.run_length;
            return cfg.t_start_ms + static_cast<double>(moment) * 1000.0 / fs;
        }
    }
    return std::nullopt;
}

inline std::optional<double> detect_t1(const SteSeries& ste,
                                       const DetectorConfig& cfg = t1_config()) {
    return detect_key_moment(ste, cfg);
}

inline std::optional<double> detect_t2(const SteSeries& ste,
                                       const DetectorConfig& cfg = t2_config()) {
    return detect_key_moment(ste, cfg);
}

} // namespace cbkm
