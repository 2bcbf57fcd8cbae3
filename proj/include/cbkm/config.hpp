#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "cbkm/bandpass.hpp"
#include "cbkm/changepoint.hpp"
#include "cbkm/detector.hpp"
#include "cbkm/errors.hpp"
#include "cbkm/evaluation.hpp"
#include "cbkm/ground_truth.hpp"
#include "cbkm/record_io.hpp"
#include "cbkm/synth.hpp"

namespace cbkm {

enum class AnalyzedSeries { squared, ste };

struct ChangePointConfig {
    ChangePointMethod method = ChangePointMethod::binseg;
    double range_lo_ms = 60.0;
    double range_hi_ms = 85.0;
    AnalyzedSeries series = AnalyzedSeries::squared;
    double half_width_ms = 2.0;
    double grid_step_ms = 0.5;
};

struct GroundTruthConfig {
    Pole pole = Pole::A;
    double drop_fraction = 0.5;
    double plateau_ms = 10.0;
};

struct EvaluationConfig {
    std::size_t reference_ops = 5000;
    std::optional<StageBounds> stage_bounds; // unset: taken from the corpus manifest
    bool strict_rmse = false;
};

struct IoConfig {
    RecordFormat format = RecordFormat::binary;
    ChannelMap channel_map;
};

struct SynthConfig {
    DegradationModel degradation;
    CloseOpModel op_template;
};

/// Full pipeline configuration. Precedence: built-in defaults, then the
/// JSON file, then CLI flags.
struct RunConfig {
    BandPassSpec bandpass;
    DetectorConfig detector_t1 = t1_config();
    DetectorConfig detector_t2 = t2_config();
    ChangePointConfig changepoint;
    GroundTruthConfig ground_truth;
    EvaluationConfig evaluation;
    IoConfig io;
    SynthConfig synth;
};

namespace detail {

using nlohmann::json;

template <typename T>
void get_to_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

inline void load_detector(const json& j, DetectorConfig& cfg) {
    get_to_if(j, "t_start_ms", cfg.t_start_ms);
    get_to_if(j, "t_end_ms", cfg.t_end_ms);
    get_to_if(j, "t0_ms", cfg.t0_ms);
    get_to_if(j, "L_points", cfg.L_points);
    get_to_if(j, "ste_window", cfg.ste_window);
    if (j.contains("sigma_floor") && !j.at("sigma_floor").is_null())
        cfg.sigma_floor = j.at("sigma_floor").get<double>();
    get_to_if(j, "threshold_multiplier", cfg.threshold_multiplier);
    get_to_if(j, "reset_run_on_below", cfg.reset_run_on_below);
}

inline json detector_to_json(const DetectorConfig& cfg) {
    json j;
    j["t_start_ms"] = cfg.t_start_ms;
    j["t_end_ms"] = cfg.t_end_ms;
    j["t0_ms"] = cfg.t0_ms;
    j["L_points"] = cfg.L_points;
    j["ste_window"] = cfg.ste_window;
    j["sigma_floor"] = cfg.sigma_floor ? json(*cfg.sigma_floor) : json(nullptr);
    j["threshold_multiplier"] = cfg.threshold_multiplier;
    j["reset_run_on_below"] = cfg.reset_run_on_below;
    return j;
}

inline void load_synth_op(const json& j, CloseOpModel& m) {
    get_to_if(j, "t1_true_ms", m.t1_true_ms);
    get_to_if(j, "t2_true_ms", m.t2_true_ms);
    get_to_if(j, "latch_burst_amp", m.latch_burst_amp);
    get_to_if(j, "contact_burst_amp", m.contact_burst_amp);
    get_to_if(j, "burst_decay_ms", m.burst_decay_ms);
    get_to_if(j, "burst_carrier_hz", m.burst_carrier_hz);
    get_to_if(j, "burst_attack_ms", m.burst_attack_ms);
    get_to_if(j, "noise_std", m.noise_std);
    get_to_if(j, "mech_vibration_std", m.mech_vibration_std);
    get_to_if(j, "post_contact_std", m.post_contact_std);
    get_to_if(j, "post_contact_tone_hz", m.post_contact_tone_hz);
    get_to_if(j, "post_contact_delay_ms", m.post_contact_delay_ms);
    get_to_if(j, "contact_fall_ms", m.contact_fall_ms);
    get_to_if(j, "fs_hz", m.fs_hz);
    get_to_if(j, "duration_ms", m.duration_ms);
    get_to_if(j, "seed", m.seed);
}

inline json synth_op_to_json(const CloseOpModel& m) {
    json j;
    j["latch_burst_amp"] = m.latch_burst_amp;
    j["contact_burst_amp"] = m.contact_burst_amp;
    j["burst_decay_ms"] = m.burst_decay_ms;
    j["burst_carrier_hz"] = m.burst_carrier_hz;
    j["burst_attack_ms"] = m.burst_attack_ms;
    j["noise_std"] = m.noise_std;
    j["mech_vibration_std"] = m.mech_vibration_std;
    j["post_contact_std"] = m.post_contact_std;
    j["post_contact_tone_hz"] = m.post_contact_tone_hz;
    j["post_contact_delay_ms"] = m.post_contact_delay_ms;
    j["contact_fall_ms"] = m.contact_fall_ms;
    j["fs_hz"] = m.fs_hz;
    j["duration_ms"] = m.duration_ms;
    return j;
}

inline void load_degradation(const json& j, DegradationModel& d) {
    get_to_if(j, "ops", d.n_ops);
    get_to_if(j, "initiation_fraction", d.initiation_fraction);
    get_to_if(j, "stationary_fraction", d.stationary_fraction);
    get_to_if(j, "wearing_fraction", d.wearing_fraction);
    get_to_if(j, "t2_start_ms", d.t2_start_ms);
    get_to_if(j, "t2_end_ms", d.t2_end_ms);
    get_to_if(j, "interval_start_ms", d.interval_start_ms);
    get_to_if(j, "interval_end_ms", d.interval_end_ms);
    get_to_if(j, "jitter_initiation_ms", d.jitter_initiation_ms);
    get_to_if(j, "jitter_stationary_ms", d.jitter_stationary_ms);
    get_to_if(j, "jitter_wearing_end_ms", d.jitter_wearing_end_ms);
    get_to_if(j, "interval_jitter_ms", d.interval_jitter_ms);
    get_to_if(j, "seed", d.seed);
}

inline json degradation_to_json(const DegradationModel& d) {
    json j;
    j["ops"] = d.n_ops;
    j["initiation_fraction"] = d.initiation_fraction;
    j["stationary_fraction"] = d.stationary_fraction;
    j["wearing_fraction"] = d.wearing_fraction;
    j["t2_start_ms"] = d.t2_start_ms;
    j["t2_end_ms"] = d.t2_end_ms;
    j["interval_start_ms"] = d.interval_start_ms;
    j["interval_end_ms"] = d.interval_end_ms;
    j["jitter_initiation_ms"] = d.jitter_initiation_ms;
    j["jitter_stationary_ms"] = d.jitter_stationary_ms;
    j["jitter_wearing_end_ms"] = d.jitter_wearing_end_ms;
    j["interval_jitter_ms"] = d.interval_jitter_ms;
    j["seed"] = d.seed;
    return j;
}

} // namespace detail

/// Overlay JSON config onto `cfg` (only keys present in the JSON change).
inline void apply_config_json(const nlohmann::json& j, RunConfig& cfg) {
    using detail::get_to_if;
    if (j.contains("bandpass")) {
        const auto& b = j.at("bandpass");
        get_to_if(b, "low_cutoff_hz", cfg.bandpass.low_cutoff_hz);
        get_to_if(b, "high_cutoff_hz", cfg.bandpass.high_cutoff_hz);
        get_to_if(b, "order", cfg.bandpass.order);
        get_to_if(b, "zero_phase", cfg.bandpass.zero_phase);
    }
    if (j.contains("detector")) {
        const auto& d = j.at("detector");
        if (d.contains("t1")) detail::load_detector(d.at("t1"), cfg.detector_t1);
        if (d.contains("t2")) detail::load_detector(d.at("t2"), cfg.detector_t2);
    }
    if (j.contains("changepoint")) {
        const auto& c = j.at("changepoint");
        if (c.contains("method")) {
            const std::string m = c.at("method").get<std::string>();
            if (m == "binseg") cfg.changepoint.method = ChangePointMethod::binseg;
            else if (m == "window") cfg.changepoint.method = ChangePointMethod::window;
            else if (m == "bottomup") cfg.changepoint.method = ChangePointMethod::bottomup;
            else throw ConfigError("changepoint.method must be binseg, window or bottomup");
        }
        if (c.contains("range_ms")) {
            const auto& r = c.at("range_ms");
            if (!r.is_array() || r.size() != 2)
                throw ConfigError("changepoint.range_ms must be [lo, hi]");
            cfg.changepoint.range_lo_ms = r.at(0).get<double>();
            cfg.changepoint.range_hi_ms = r.at(1).get<double>();
        }
        if (c.contains("series")) {
            const std::string s = c.at("series").get<std::string>();
            if (s == "squared") cfg.changepoint.series = AnalyzedSeries::squared;
            else if (s == "ste") cfg.changepoint.series = AnalyzedSeries::ste;
            else throw ConfigError("changepoint.series must be 'squared' or 'ste'");
        }
        get_to_if(c, "half_width_ms", cfg.changepoint.half_width_ms);
        get_to_if(c, "grid_step_ms", cfg.changepoint.grid_step_ms);
    }
    if (j.contains("ground_truth")) {
        const auto& g = j.at("ground_truth");
        if (g.contains("pole")) cfg.ground_truth.pole = pole_from_string(g.at("pole").get<std::string>());
        get_to_if(g, "drop_fraction", cfg.ground_truth.drop_fraction);
        get_to_if(g, "plateau_ms", cfg.ground_truth.plateau_ms);
    }
    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        get_to_if(e, "reference_ops", cfg.evaluation.reference_ops);
        if (e.contains("stage_bounds")) {
            StageBounds b;
            get_to_if(e.at("stage_bounds"), "init_end", b.init_end);
            get_to_if(e.at("stage_bounds"), "stat_end", b.stat_end);
            cfg.evaluation.stage_bounds = b;
        }
        get_to_if(e, "strict_rmse", cfg.evaluation.strict_rmse);
    }
    if (j.contains("io")) {
        const auto& io = j.at("io");
        if (io.contains("format")) {
            const std::string f = io.at("format").get<std::string>();
            if (f == "bin" || f == "binary") cfg.io.format = RecordFormat::binary;
            else if (f == "csv") cfg.io.format = RecordFormat::csv;
            else throw ConfigError("io.format must be 'bin' or 'csv'");
        }
        if (io.contains("channel_map")) {
            const auto& m = io.at("channel_map");
            get_to_if(m, "vibration", cfg.io.channel_map.vibration);
            get_to_if(m, "contact_A", cfg.io.channel_map.contact_a);
            get_to_if(m, "contact_B", cfg.io.channel_map.contact_b);
            get_to_if(m, "contact_C", cfg.io.channel_map.contact_c);
        }
    }
    if (j.contains("synth")) {
        detail::load_degradation(j.at("synth"), cfg.synth.degradation);
        detail::load_synth_op(j.at("synth"), cfg.synth.op_template);
    }
}

inline RunConfig load_config(const std::filesystem::path& path) {
    RunConfig cfg;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    apply_config_json(j, cfg);
    return cfg;
}

/// The resolved configuration, echoed into reports and manifests.
inline nlohmann::json effective_config_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["bandpass"] = {{"low_cutoff_hz", cfg.bandpass.low_cutoff_hz},
                     {"high_cutoff_hz", cfg.bandpass.high_cutoff_hz},
                     {"order", cfg.bandpass.order},
                     {"zero_phase", cfg.bandpass.zero_phase}};
    j["detector"]["t1"] = detail::detector_to_json(cfg.detector_t1);
    j["detector"]["t2"] = detail::detector_to_json(cfg.detector_t2);
    j["changepoint"] = {
        {"method", to_string(cfg.changepoint.method)},
        {"range_ms", {cfg.changepoint.range_lo_ms, cfg.changepoint.range_hi_ms}},
        {"series", cfg.changepoint.series == AnalyzedSeries::squared ? "squared" : "ste"},
        {"half_width_ms", cfg.changepoint.half_width_ms},
        {"grid_step_ms", cfg.changepoint.grid_step_ms}};
    j["ground_truth"] = {{"pole", to_string(cfg.ground_truth.pole)},
                         {"drop_fraction", cfg.ground_truth.drop_fraction},
                         {"plateau_ms", cfg.ground_truth.plateau_ms}};
    j["evaluation"]["reference_ops"] = cfg.evaluation.reference_ops;
    if (cfg.evaluation.stage_bounds) {
        j["evaluation"]["stage_bounds"] = {{"init_end", cfg.evaluation.stage_bounds->init_end},
                                           {"stat_end", cfg.evaluation.stage_bounds->stat_end}};
    }
    j["evaluation"]["strict_rmse"] = cfg.evaluation.strict_rmse;
    j["io"] = {{"format", cfg.io.format == RecordFormat::binary ? "bin" : "csv"},
               {"channel_map",
                {{"vibration", cfg.io.channel_map.vibration},
                 {"contact_A", cfg.io.channel_map.contact_a},
                 {"contact_B", cfg.io.channel_map.contact_b},
                 {"contact_C", cfg.io.channel_map.contact_c}}}};
    j["synth"] = detail::degradation_to_json(cfg.synth.degradation);
    nlohmann::json op = detail::synth_op_to_json(cfg.synth.op_template);
    for (auto it = op.begin(); it != op.end(); ++it) j["synth"][it.key()] = it.value();
    return j;
}

} // namespace cbkm
