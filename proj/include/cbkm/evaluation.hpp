#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbkm/detector.hpp"
#include "cbkm/errors.hpp"
#include "cbkm/ground_truth.hpp"
#include "cbkm/waveform.hpp"

namespace cbkm {

/// One close operation of a run-to-failure trajectory.
struct OperationRecord {
    std::int64_t op_number = 0;
    Waveform vibration;
    std::vector<ContactChannel> contacts;
    KeyMoments detected;
    std::optional<double> t_cp_ms;
    std::optional<double> t_c_ms;
};

using Trajectory = std::vector<OperationRecord>;

enum class Stage { initiation, stationary, wearing };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::initiation: return "initiation";
        case Stage::stationary: return "stationary";
        case Stage::wearing: return "wearing";
    }
    return "?";
}

/// Operation-number boundaries between lifetime stages.
struct StageBounds {
    std::int64_t init_end = 5000;
    std::int64_t stat_end = 20000;
};

inline Stage stage_label(std::int64_t op_number, const StageBounds& bounds = {}) {
    if (bounds.init_end > bounds.stat_end)
        throw ConfigError("stage_label: bounds must satisfy init_end <= stat_end");
    if (op_number < bounds.init_end) return Stage::initiation;
    if (op_number < bounds.stat_end) return Stage::stationary;
    return Stage::wearing;
}

enum class DetectedQuantity { t2, cp };

struct ResidualSeries {
    std::vector<std::pair<std::int64_t, double>> points; // (op_number, residual ms)
    std::size_t excluded = 0;                            // ops missing either value
};

namespace detail {

inline std::optional<double> detected_value(const OperationRecord& op, DetectedQuantity which) {
    return which == DetectedQuantity::t2 ? op.detected.t2_ms : op.t_cp_ms;
}

inline void require_sorted(const Trajectory& traj, const char* who) {
    if (traj.empty()) throw DataError(std::string(who) + ": empty trajectory");
    for (std::size_t i = 1; i < traj.size(); ++i) {
        if (!(traj[i - 1].op_number < traj[i].op_number))
            throw DataError(std::string(who) +
                            ": trajectory must be strictly ascending in op_number");
    }
}

} // namespace detail

/// Per-operation residual t_c - t_detected. Operations missing either the
/// ground truth or the detection are excluded and counted.
inline ResidualSeries residual_series(const Trajectory& traj, DetectedQuantity which) {
    detail::require_sorted(traj, "residual_series");
    ResidualSeries out;
    for (const auto& op : traj) {
        const auto det = detail::detected_value(op, which);
        if (op.t_c_ms && det) {
            out.points.emplace_back(op.op_number, *op.t_c_ms - *det);
        } else {
            ++out.excluded;
        }
    }
    return out;
}

/// Root mean squared residual. By default the mean is over contributing
/// operations only; strict mode divides by the full inclusive op-number
/// range instead (absent detections then only shrink the mean).
inline double rmse(const Trajectory& traj, DetectedQuantity which, bool strict_denominator = false) {
    const ResidualSeries rs = residual_series(traj, which);
    if (rs.points.empty()) throw DataError("rmse: no contributing operations");
    double sum_sq = 0.0;
    for (const auto& [i, r] : rs.points) sum_sq += r * r;
    double denom;
    if (strict_denominator) {
        denom = static_cast<double>(traj.back().op_number - traj.front().op_number + 1);
    } else {
        denom = static_cast<double>(rs.points.size());
    }
    return std::sqrt(sum_sq / denom);
}

struct DelayCorrectedRmse {
    double delay_ms = 0.0;       // mean change-point residual over the reference window
    double rmse_ms = 0.0;        // RMSE of (residual - delay) over the whole trajectory
    std::size_t reference_used = 0;
};

/// Removes the systematic change-point delay estimated from early life.
/// The reference window is the first `reference_ops` operations, scaled to
/// ceil(0.19 * n) when the trajectory is shorter than requested.
inline DelayCorrectedRmse delay_corrected_rmse(const Trajectory& traj,
                                               std::size_t reference_ops = 5000) {
    detail::require_sorted(traj, "delay_corrected_rmse");
    std::size_t eff = reference_ops;
    if (traj.size() < reference_ops)
        eff = static_cast<std::size_t>(std::ceil(0.19 * static_cast<double>(traj.size())));
    if (eff < 1 || eff > traj.size())
        throw DataError("delay_corrected_rmse: reference window does not fit the trajectory");

    double ref_sum = 0.0;
    std::size_t ref_n = 0;
    for (std::size_t k = 0; k < eff; ++k) {
        const auto& op = traj[k];
        if (op.t_c_ms && op.t_cp_ms) {
            ref_sum += *op.t_c_ms - *op.t_cp_ms;
            ++ref_n;
        }
    }
    if (ref_n == 0)
        throw DataError("delay_corrected_rmse: no contributing operations in the reference window");

    DelayCorrectedRmse out;
    out.delay_ms = ref_sum / static_cast<double>(ref_n);
    out.reference_used = eff;

    double sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto& op : traj) {
        if (op.t_c_ms && op.t_cp_ms) {
            const double r = (*op.t_c_ms - *op.t_cp_ms) - out.delay_ms;
            sum_sq += r * r;
            ++n;
        }
    }
    out.rmse_ms = std::sqrt(sum_sq / static_cast<double>(n));
    return out;
}

/// Per-operation key-moment interval t2 - t1 (the contact moving time).
inline ResidualSeries interval_series(const Trajectory& traj) {
    detail::require_sorted(traj, "interval_series");
    ResidualSeries out;
    for (const auto& op : traj) {
        if (op.detected.t1_ms && op.detected.t2_ms) {
            out.points.emplace_back(op.op_number, *op.detected.t2_ms - *op.detected.t1_ms);
        } else {
            ++out.excluded;
        }
    }
    return out;
}

/// Full scoring bundle for a trajectory.
struct TrajectoryReport {
    ResidualSeries residual_t2;
    ResidualSeries residual_cp;
    ResidualSeries interval_t2_t1;
    std::optional<double> rmse_t2_ms;
    std::optional<double> rmse_cp_ms;
    std::optional<double> rmse_cp_delay_corrected_ms;
    std::optional<double> delay_reference_ms;
    std::size_t delay_reference_ops = 0;
    std::vector<std::pair<std::int64_t, Stage>> stage_labels;
    std::size_t n_ops = 0;
};

struct ReportOptions {
    StageBounds stage_bounds;
    std::size_t reference_ops = 5000;
    bool strict_rmse = false;
};

inline TrajectoryReport make_trajectory_report(const Trajectory& traj,
                                               const ReportOptions& opts = {}) {
    detail::require_sorted(traj, "make_trajectory_report");
    TrajectoryReport rep;
    rep.n_ops = traj.size();
    rep.residual_t2 = residual_series(traj, DetectedQuantity::t2);
    rep.residual_cp = residual_series(traj, DetectedQuantity::cp);
    rep.interval_t2_t1 = interval_series(traj);
    if (!rep.residual_t2.points.empty())
        rep.rmse_t2_ms = rmse(traj, DetectedQuantity::t2, opts.strict_rmse);
    if (!rep.residual_cp.points.empty()) {
        rep.rmse_cp_ms = rmse(traj, DetectedQuantity::cp, opts.strict_rmse);
        const auto corrected = delay_corrected_rmse(traj, opts.reference_ops);
        rep.rmse_cp_delay_corrected_ms = corrected.rmse_ms;
        rep.delay_reference_ms = corrected.delay_ms;
        rep.delay_reference_ops = corrected.reference_used;
    }
    rep.stage_labels.reserve(traj.size());
    for (const auto& op : traj)
        rep.stage_labels.emplace_back(op.op_number, stage_label(op.op_number, opts.stage_bounds));
    return rep;
}

} // namespace cbkm
