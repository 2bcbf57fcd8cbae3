#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "cbkm/bandpass.hpp"
#include "cbkm/changepoint.hpp"
#include "cbkm/config.hpp"
#include "cbkm/detector.hpp"
#include "cbkm/evaluation.hpp"
#include "cbkm/ste.hpp"
#include "cbkm/waveform.hpp"

namespace cbkm {

/// Per-operation detection output.
struct DetectionRow {
    std::int64_t op_number = 0;
    std::optional<double> t1_ms;
    std::optional<double> t2_ms;
    std::optional<double> t_cp_ms;
};

/// Full per-operation chain: band-pass, short-time energy, moving-threshold
/// detection of both key moments, change-point baseline on the configured
/// series (squared filtered signal by default).
inline DetectionRow process_operation(const Waveform& vibration, std::int64_t op_number,
                                      const RunConfig& cfg) {
    DetectionRow row;
    row.op_number = op_number;

    const Waveform filtered = band_pass(vibration, cfg.bandpass);

    const SteSeries ste1 = short_time_energy(filtered, cfg.detector_t1.ste_window);
    row.t1_ms = detect_key_moment(ste1, cfg.detector_t1);
    if (cfg.detector_t2.ste_window == cfg.detector_t1.ste_window) {
        row.t2_ms = detect_key_moment(ste1, cfg.detector_t2);
    } else {
        const SteSeries ste2 = short_time_energy(filtered, cfg.detector_t2.ste_window);
        row.t2_ms = detect_key_moment(ste2, cfg.detector_t2);
    }

    std::vector<double> series;
    if (cfg.changepoint.series == AnalyzedSeries::squared) {
        series.resize(filtered.samples.size());
        for (std::size_t i = 0; i < series.size(); ++i)
            series[i] = filtered.samples[i] * filtered.samples[i];
    } else {
        series = short_time_energy(filtered, cfg.detector_t2.ste_window).values;
    }

    const double fs = filtered.sampling_rate_hz;
    const auto clamp_idx = [&](double ms) {
        const auto i = static_cast<std::ptrdiff_t>(
            std::llround((ms - filtered.t0_offset_ms) * fs / 1000.0));
        return static_cast<std::size_t>(std::min<std::ptrdiff_t>(
            std::max<std::ptrdiff_t>(i, 0), static_cast<std::ptrdiff_t>(series.size())));
    };
    const std::size_t lo = clamp_idx(cfg.changepoint.range_lo_ms);
    const std::size_t hi = clamp_idx(cfg.changepoint.range_hi_ms);

    ChangePointResult cp;
    switch (cfg.changepoint.method) {
        case ChangePointMethod::binseg:
            cp = binseg_single(series, fs, lo, hi, filtered.t0_offset_ms);
            break;
        case ChangePointMethod::window: {
            const auto w = static_cast<std::size_t>(
                std::llround(cfg.changepoint.half_width_ms * fs / 1000.0));
            cp = window_single(series, fs, lo, hi, std::max<std::size_t>(w, 1),
                               filtered.t0_offset_ms);
            break;
        }
        case ChangePointMethod::bottomup: {
            const auto g = static_cast<std::size_t>(
                std::llround(cfg.changepoint.grid_step_ms * fs / 1000.0));
            cp = bottomup_single(series, fs, lo, hi, std::max<std::size_t>(g, 1),
                                 filtered.t0_offset_ms);
            break;
        }
    }
    if (!cp.no_signal) row.t_cp_ms = cp.t_cp_ms;
    return row;
}

/// Number of workers: explicit request, else CBKM_WORKERS, else hardware.
inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CBKM_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Run fn(i) for i in [0, n) on `workers` threads. Work items are claimed
/// from an atomic counter; outputs must be written to per-index slots so
/// results do not depend on scheduling.
inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& fn) {
    workers = std::max(1u, workers);
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace cbkm
