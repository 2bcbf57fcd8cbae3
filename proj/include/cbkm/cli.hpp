#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbkm/config.hpp"
#include "cbkm/errors.hpp"
#include "cbkm/evaluation.hpp"
#include "cbkm/ground_truth.hpp"
#include "cbkm/oracle.hpp"
#include "cbkm/pipeline.hpp"
#include "cbkm/record_io.hpp"
#include "cbkm/ste.hpp"
#include "cbkm/svg.hpp"
#include "cbkm/synth.hpp"

namespace cbkm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;   // verification / runtime failure
inline constexpr int kExitUsage = 2;     // usage / config error

namespace detail {

inline std::string fmt_ms(const std::optional<double>& v) {
    if (!v) return "-1";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

inline std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Burst amplitude over the in-band noise floor, both taken through the
/// configured filter (noise power via the mean squared magnitude response
/// on a uniform frequency grid).
inline double inband_snr_db(const CloseOpModel& m, const BandPassSpec& spec) {
    const auto sos = design_butterworth_bandpass(spec, m.fs_hz);
    const int grid = 4096;
    double acc = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double f = (i + 0.5) / grid * m.fs_hz / 2.0;
        double g = std::norm(frequency_response(sos, f, m.fs_hz));
        if (spec.zero_phase) g *= g;
        acc += g;
    }
    const double noise_gain = acc / grid;
    double sig_gain = std::abs(frequency_response(sos, m.burst_carrier_hz, m.fs_hz));
    if (spec.zero_phase) sig_gain *= sig_gain;
    const double a = m.contact_burst_amp * sig_gain;
    const double noise_var = m.noise_std * m.noise_std * noise_gain;
    if (noise_var <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(a * a / (2.0 * noise_var));
}

inline std::string record_filename(std::int64_t op_number, RecordFormat format) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "op_%06lld.%s", static_cast<long long>(op_number),
                  format == RecordFormat::binary ? "cbkm" : "csv");
    return buf;
}

} // namespace detail

// ---------------------------------------------------------------- synth --

struct SynthResult {
    fs::path manifest_path;
    std::size_t n_ops = 0;
};

/// Generate a corpus: per-op record files plus a manifest with the
/// injected truths and the effective configuration.
inline SynthResult cmd_synth(const RunConfig& cfg, const fs::path& out_dir, unsigned workers) {
    validate_degradation_model(cfg.synth.degradation);
    const auto truths = trajectory_truths(cfg.synth.degradation);
    const fs::path records_dir = out_dir / "records";
    fs::create_directories(records_dir);

    std::vector<std::string> paths(truths.size());
    parallel_for(truths.size(), workers, [&](std::size_t i) {
        const CloseOpModel model = make_op_model(cfg.synth.degradation, cfg.synth.op_template,
                                                 truths[i]);
        const GeneratedOp op = gen_close_op(model);
        OperationRecord rec;
        rec.op_number = truths[i].op_number;
        rec.vibration = op.vibration;
        rec.contacts = {op.contact};
        const std::string name = detail::record_filename(rec.op_number, cfg.io.format);
        write_record(from_operation_record(rec, cfg.io.channel_map), records_dir / name,
                     cfg.io.format);
        paths[i] = "records/" + name;
    });

    const auto split = stage_split(cfg.synth.degradation);
    json manifest;
    manifest["corpus_version"] = 1;
    manifest["fs_hz"] = cfg.synth.op_template.fs_hz;
    manifest["format"] = cfg.io.format == RecordFormat::binary ? "bin" : "csv";
    manifest["generator"] = {
        {"seed", cfg.synth.degradation.seed},
        {"ops", cfg.synth.degradation.n_ops},
        {"t2_drift_ms", {cfg.synth.degradation.t2_start_ms, cfg.synth.degradation.t2_end_ms}},
        {"stage_bounds",
         {{"init_end", split.initiation_end}, {"stat_end", split.stationary_end}}},
        {"in_band_snr_db", detail::inband_snr_db(cfg.synth.op_template, cfg.bandpass)}};
    manifest["config"] = effective_config_json(cfg);
    json ops = json::array();
    for (std::size_t i = 0; i < truths.size(); ++i) {
        json op;
        op["op_number"] = truths[i].op_number;
        op["path"] = paths[i];
        op["truths"] = {{"t1_ms", truths[i].t1_true_ms},
                        {"t2_ms", truths[i].t2_true_ms},
                        {"stage", to_string(truths[i].stage)}};
        ops.push_back(op);
    }
    manifest["ops"] = ops;

    SynthResult res;
    res.manifest_path = out_dir / "manifest.json";
    res.n_ops = truths.size();
    detail::write_text(res.manifest_path, manifest.dump(2) + "\n");

    std::cout << "synth: ops=" << res.n_ops << " seed=" << cfg.synth.degradation.seed
              << " t2_drift_ms=" << cfg.synth.degradation.t2_start_ms << "->"
              << cfg.synth.degradation.t2_end_ms
              << " in_band_snr_db=" << detail::fmt6(detail::inband_snr_db(
                     cfg.synth.op_template, cfg.bandpass))
              << " out=" << out_dir.string() << "\n";
    return res;
}

// --------------------------------------------------------------- detect --

struct ManifestOp {
    std::int64_t op_number = 0;
    fs::path path;
    std::optional<double> t1_true_ms;
    std::optional<double> t2_true_ms;
};

struct Manifest {
    double fs_hz = 0.0;
    std::optional<StageBounds> stage_bounds;
    std::vector<ManifestOp> ops;
};

inline Manifest read_manifest(const fs::path& corpus_dir) {
    const fs::path path = corpus_dir / "manifest.json";
    json j;
    try {
        j = json::parse(detail::read_text(path));
    } catch (const json::exception& e) {
        throw DataError("manifest is not valid JSON: " + std::string(e.what()));
    }
    Manifest m;
    if (!j.contains("ops") || !j.at("ops").is_array() || j.at("ops").empty())
        throw DataError("manifest has no ops");
    if (j.contains("fs_hz")) m.fs_hz = j.at("fs_hz").get<double>();
    if (j.contains("generator") && j.at("generator").contains("stage_bounds")) {
        StageBounds b;
        b.init_end = j.at("generator").at("stage_bounds").at("init_end").get<std::int64_t>();
        b.stat_end = j.at("generator").at("stage_bounds").at("stat_end").get<std::int64_t>();
        m.stage_bounds = b;
    }
    std::int64_t prev = std::numeric_limits<std::int64_t>::min();
    for (const auto& jop : j.at("ops")) {
        ManifestOp op;
        op.op_number = jop.at("op_number").get<std::int64_t>();
        op.path = corpus_dir / jop.at("path").get<std::string>();
        if (jop.contains("truths")) {
            const auto& t = jop.at("truths");
            if (t.contains("t1_ms")) op.t1_true_ms = t.at("t1_ms").get<double>();
            if (t.contains("t2_ms")) op.t2_true_ms = t.at("t2_ms").get<double>();
        }
        if (op.op_number <= prev)
            throw DataError("manifest ops must be strictly ascending in op_number");
        prev = op.op_number;
        m.ops.push_back(op);
    }
    return m;
}

struct DetectResult {
    fs::path csv_path;
    std::size_t rows = 0;
    std::size_t failed = 0;
};

/// Run the detection chain over a corpus; one CSV row per readable record,
/// sorted by op_number, absent detections serialized as -1.
inline DetectResult cmd_detect(const RunConfig& cfg, const fs::path& corpus_dir,
                               const fs::path& out_dir, unsigned workers) {
    const Manifest manifest = read_manifest(corpus_dir);
    fs::create_directories(out_dir);

    std::vector<std::optional<DetectionRow>> rows(manifest.ops.size());
    std::vector<std::string> warnings(manifest.ops.size());
    parallel_for(manifest.ops.size(), workers, [&](std::size_t i) {
        try {
            const OperationRecord rec = read_record(manifest.ops[i].path, cfg.io.channel_map);
            rows[i] = process_operation(rec.vibration, manifest.ops[i].op_number, cfg);
        } catch (const std::exception& e) {
            warnings[i] = e.what();
        }
    });

    std::size_t failed = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i]) {
            ++failed;
            std::cerr << "warning: skipping op " << manifest.ops[i].op_number << " ("
                      << manifest.ops[i].path.string() << "): " << warnings[i] << "\n";
        } else if (rows[i]->t1_ms && rows[i]->t2_ms && !(*rows[i]->t1_ms < *rows[i]->t2_ms)) {
            std::cerr << "warning: op " << rows[i]->op_number
                      << ": detected moments out of order (t1 " << detail::fmt_ms(rows[i]->t1_ms)
                      << " >= t2 " << detail::fmt_ms(rows[i]->t2_ms) << ")\n";
        }
    }

    std::ostringstream csv;
    csv << "op_number,t1_ms,t2_ms,t_cp_ms\n";
    for (const auto& row : rows) {
        if (!row) continue;
        csv << row->op_number << "," << detail::fmt_ms(row->t1_ms) << ","
            << detail::fmt_ms(row->t2_ms) << "," << detail::fmt_ms(row->t_cp_ms) << "\n";
    }

    DetectResult res;
    res.csv_path = out_dir / "detections.csv";
    res.rows = rows.size() - failed;
    res.failed = failed;
    detail::write_text(res.csv_path, csv.str());

    if (static_cast<double>(failed) > 0.01 * static_cast<double>(manifest.ops.size()))
        throw DataError("too many unreadable records: " + std::to_string(failed) + " of " +
                        std::to_string(manifest.ops.size()));
    return res;
}

// ----------------------------------------------------------------- eval --

inline std::map<std::int64_t, DetectionRow> read_detections_csv(const fs::path& path) {
    const std::string text = detail::read_text(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("detections CSV is empty");
    if (line != "op_number,t1_ms,t2_ms,t_cp_ms")
        throw DataError("unexpected detections CSV header: " + line);
    std::map<std::int64_t, DetectionRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        DetectionRow row;
        double t1 = -1.0, t2 = -1.0, tcp = -1.0;
        long long op = 0;
        if (std::sscanf(line.c_str(), "%lld,%lf,%lf,%lf", &op, &t1, &t2, &tcp) != 4)
            throw DataError("malformed detections row: " + line);
        row.op_number = op;
        if (t1 >= 0.0) row.t1_ms = t1;
        if (t2 >= 0.0) row.t2_ms = t2;
        if (tcp >= 0.0) row.t_cp_ms = tcp;
        rows[row.op_number] = row;
    }
    return rows;
}

struct EvalResult {
    fs::path report_json_path;
    TrajectoryReport report;
};

/// Join detections with contact-separation ground truth, score the
/// trajectory, and emit the report files and plots.
inline EvalResult cmd_eval(const RunConfig& cfg, const fs::path& detections_csv,
                           const fs::path& corpus_dir, const fs::path& out_dir,
                           unsigned workers) {
    const Manifest manifest = read_manifest(corpus_dir);
    const auto detections = read_detections_csv(detections_csv);
    fs::create_directories(out_dir);

    struct JoinedOp {
        bool present = false;
        OperationRecord rec;
    };
    std::vector<JoinedOp> joined(manifest.ops.size());
    parallel_for(manifest.ops.size(), workers, [&](std::size_t i) {
        const auto it = detections.find(manifest.ops[i].op_number);
        if (it == detections.end()) return;
        OperationRecord op;
        op.op_number = manifest.ops[i].op_number;
        op.detected.t1_ms = it->second.t1_ms;
        op.detected.t2_ms = it->second.t2_ms;
        op.t_cp_ms = it->second.t_cp_ms;
        try {
            const OperationRecord full = read_record(manifest.ops[i].path, cfg.io.channel_map);
            for (const auto& ch : full.contacts) {
                if (ch.pole == cfg.ground_truth.pole) {
                    const ClosingTime tc = extract_closing_time(
                        ch, cfg.ground_truth.drop_fraction, cfg.ground_truth.plateau_ms);
                    op.t_c_ms = tc.t_c_ms;
                    break;
                }
            }
        } catch (const std::exception& e) {
            std::cerr << "warning: no ground truth for op " << op.op_number << ": " << e.what()
                      << "\n";
        }
        joined[i] = {true, std::move(op)};
    });

    Trajectory traj;
    for (auto& jop : joined) {
        if (jop.present) traj.push_back(std::move(jop.rec));
    }
    if (traj.empty()) throw ConfigError("eval: detections and corpus share no op_number");

    ReportOptions opts;
    opts.reference_ops = cfg.evaluation.reference_ops;
    opts.strict_rmse = cfg.evaluation.strict_rmse;
    if (cfg.evaluation.stage_bounds) opts.stage_bounds = *cfg.evaluation.stage_bounds;
    else if (manifest.stage_bounds) opts.stage_bounds = *manifest.stage_bounds;
    const TrajectoryReport rep = make_trajectory_report(traj, opts);

    // report.json
    json j;
    j["n_ops"] = rep.n_ops;
    j["rmse_t2_ms"] = rep.rmse_t2_ms ? json(*rep.rmse_t2_ms) : json(nullptr);
    j["rmse_cp_ms"] = rep.rmse_cp_ms ? json(*rep.rmse_cp_ms) : json(nullptr);
    j["rmse_cp_delay_corrected_ms"] =
        rep.rmse_cp_delay_corrected_ms ? json(*rep.rmse_cp_delay_corrected_ms) : json(nullptr);
    j["delay_reference_ms"] = rep.delay_reference_ms ? json(*rep.delay_reference_ms) : json(nullptr);
    j["delay_reference_ops"] = rep.delay_reference_ops;
    j["counts"] = {{"t2_contributing", rep.residual_t2.points.size()},
                   {"t2_excluded", rep.residual_t2.excluded},
                   {"cp_contributing", rep.residual_cp.points.size()},
                   {"cp_excluded", rep.residual_cp.excluded},
                   {"interval_contributing", rep.interval_t2_t1.points.size()},
                   {"interval_excluded", rep.interval_t2_t1.excluded}};
    j["stage_bounds"] = {{"init_end", opts.stage_bounds.init_end},
                         {"stat_end", opts.stage_bounds.stat_end}};
    j["config"] = effective_config_json(cfg);

    EvalResult res;
    res.report_json_path = out_dir / "report.json";
    res.report = rep;
    detail::write_text(res.report_json_path, j.dump(2) + "\n");

    // report.csv
    std::map<std::int64_t, double> res_t2, res_cp, res_iv;
    for (const auto& [i, r] : rep.residual_t2.points) res_t2[i] = r;
    for (const auto& [i, r] : rep.residual_cp.points) res_cp[i] = r;
    for (const auto& [i, r] : rep.interval_t2_t1.points) res_iv[i] = r;
    std::ostringstream csv;
    csv << "op_number,t_c_ms,t1_ms,t2_ms,t_cp_ms,residual_t2_ms,residual_cp_ms,interval_ms,stage\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& op = traj[k];
        csv << op.op_number << "," << detail::fmt_ms(op.t_c_ms) << ","
            << detail::fmt_ms(op.detected.t1_ms) << "," << detail::fmt_ms(op.detected.t2_ms)
            << "," << detail::fmt_ms(op.t_cp_ms) << ",";
        csv << (res_t2.count(op.op_number) ? detail::fmt6(res_t2[op.op_number]) : "") << ",";
        csv << (res_cp.count(op.op_number) ? detail::fmt6(res_cp[op.op_number]) : "") << ",";
        csv << (res_iv.count(op.op_number) ? detail::fmt6(res_iv[op.op_number]) : "") << ",";
        csv << to_string(rep.stage_labels[k].second) << "\n";
    }
    detail::write_text(out_dir / "report.csv", csv.str());

    // Plots.
    const auto to_points = [](const std::vector<std::pair<std::int64_t, double>>& src) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(src.size());
        for (const auto& [i, v] : src) pts.emplace_back(static_cast<double>(i), v);
        return pts;
    };
    {
        SvgPlot plot("Closing time over lifetime", "operation number", "t_c [ms]");
        std::vector<std::pair<double, double>> pts;
        for (const auto& op : traj)
            if (op.t_c_ms) pts.emplace_back(static_cast<double>(op.op_number), *op.t_c_ms);
        plot.add_scatter("t_c", pts, "steelblue");
        detail::write_text(out_dir / "closing_time.svg", plot.to_string());
    }
    {
        SvgPlot plot("Detected key moments", "operation number", "time [ms]");
        std::vector<std::pair<double, double>> p1, p2;
        for (const auto& op : traj) {
            if (op.detected.t1_ms)
                p1.emplace_back(static_cast<double>(op.op_number), *op.detected.t1_ms);
            if (op.detected.t2_ms)
                p2.emplace_back(static_cast<double>(op.op_number), *op.detected.t2_ms);
        }
        plot.add_scatter("t1", p1, "steelblue");
        plot.add_scatter("t2", p2, "crimson");
        detail::write_text(out_dir / "key_moments.svg", plot.to_string());
    }
    {
        SvgPlot plot("Residuals vs ground truth", "operation number", "residual [ms]");
        plot.add_scatter("t_c - t2", to_points(rep.residual_t2.points), "steelblue");
        plot.add_scatter("t_c - t_cp", to_points(rep.residual_cp.points), "darkorange");
        detail::write_text(out_dir / "residuals.svg", plot.to_string());
    }
    {
        SvgPlot plot("Key-moment interval", "operation number", "t2 - t1 [ms]");
        plot.add_scatter("t2 - t1", to_points(rep.interval_t2_t1.points), "seagreen");
        detail::write_text(out_dir / "interval.svg", plot.to_string());
    }

    std::cout << "eval: ops=" << rep.n_ops
              << " rmse_t2_ms=" << (rep.rmse_t2_ms ? detail::fmt6(*rep.rmse_t2_ms) : "n/a")
              << " rmse_cp_ms=" << (rep.rmse_cp_ms ? detail::fmt6(*rep.rmse_cp_ms) : "n/a")
              << " rmse_cp_delay_corrected_ms="
              << (rep.rmse_cp_delay_corrected_ms ? detail::fmt6(*rep.rmse_cp_delay_corrected_ms)
                                                 : "n/a")
              << "\n";
    return res;
}

// --------------------------------------------------------------- oracle --

struct OracleOptions {
    std::size_t cases = 0; // 0: per-check defaults
    std::uint64_t seed = 1;
    bool inject_fault = false;
};

/// Compare the optimized paths against the brute-force references on
/// randomized inputs. Returns true when every check passes.
inline bool run_oracles(const OracleOptions& opt, std::ostream& out) {
    bool all_ok = true;

    // Short-time energy vs direct convolution.
    {
        const std::size_t cases = opt.cases ? opt.cases : 100;
        double max_rel = 0.0;
        std::size_t fail_len = 0, fail_idx = 0;
        for (std::size_t c = 0; c < cases; ++c) {
            rng::Gaussian g(rng::substream_seed(opt.seed, 0x51E00ULL + c));
            const std::size_t T = 1000;
            const std::size_t W = (c % 2 == 0) ? 32 : 600;
            Waveform w;
            w.sampling_rate_hz = 300000.0;
            w.samples.resize(T);
            const double scale = std::exp(2.0 * g.next());
            for (auto& x : w.samples) x = scale * g.next();
            std::vector<double> fast = short_time_energy(w, W).values;
            if (opt.inject_fault && c == cases / 2) fast[T / 2] *= 1.0 + 1e-5;
            const std::vector<double> ref = oracle::ste_direct(w.samples, W);
            for (std::size_t i = 0; i < T; ++i) {
                const double rel =
                    std::abs(fast[i] - ref[i]) / std::max(std::abs(ref[i]), 1e-300);
                if (rel > max_rel) {
                    max_rel = rel;
                    fail_len = T;
                    fail_idx = i;
                }
            }
        }
        const bool ok = max_rel <= 1e-9;
        all_ok = all_ok && ok;
        out << "oracle ste: cases=" << cases << " max_rel_err=" << max_rel
            << (ok ? " PASS" : " FAIL") << "\n";
        if (!ok) {
            // Shrink: halve the signal while the worst index still disagrees.
            out << "  failing case: length=" << fail_len << " index=" << fail_idx << "\n";
        }
    }

    // Segment cost vs naive two-pass.
    {
        const std::size_t cases = opt.cases ? opt.cases : 1000;
        double max_rel = 0.0;
        for (std::size_t c = 0; c < cases; ++c) {
            rng::Gaussian g(rng::substream_seed(opt.seed, 0xC057ULL + c));
            const std::size_t n = 50 + (c % 151);
            std::vector<double> s(n);
            for (auto& v : s) v = 3.0 + g.next();
            CostL2Cache cache(s);
            const std::size_t a = c % (n / 2);
            const std::size_t b = a + 2 + (c % (n - a - 1));
            const double fast = cache.cost(a, b);
            const double ref = oracle::cost_l2_naive(s, a, b);
            const double rel = std::abs(fast - ref) / std::max(std::abs(ref), 1e-300);
            max_rel = std::max(max_rel, rel);
        }
        const bool ok = max_rel <= 1e-9;
        all_ok = all_ok && ok;
        out << "oracle cost_l2: cases=" << cases << " max_rel_err=" << max_rel
            << (ok ? " PASS" : " FAIL") << "\n";
    }

    // Single split vs exhaustive evaluation.
    {
        const std::size_t cases = opt.cases ? opt.cases : 1000;
        std::size_t mismatches = 0;
        std::size_t first_bad = 0;
        for (std::size_t c = 0; c < cases; ++c) {
            rng::Gaussian g(rng::substream_seed(opt.seed, 0xB15E6ULL + c));
            const std::size_t n = 8 + (c % 193);
            std::vector<double> s(n);
            const std::size_t jump = 1 + (c % (n - 2));
            const double step = (c % 3 == 0) ? 0.0 : 2.0 + g.next();
            for (std::size_t i = 0; i < n; ++i) s[i] = (i >= jump ? step : 0.0) + 0.3 * g.next();
            ChangePointResult fast = binseg_single(s, 1000.0, 0, n);
            if (opt.inject_fault && c == cases / 2) fast.split_index += 1;
            const std::size_t ref = oracle::binseg_exhaustive(s, 0, n);
            if (fast.split_index != ref) {
                if (mismatches == 0) first_bad = c;
                ++mismatches;
            }
        }
        const bool ok = mismatches == 0;
        all_ok = all_ok && ok;
        out << "oracle binseg: cases=" << cases << " mismatches=" << mismatches
            << (ok ? " PASS" : " FAIL") << "\n";
        if (!ok) out << "  first failing case: " << first_bad << "\n";
    }

    // Moving-threshold detector vs recompute-from-scratch replay.
    {
        const std::size_t cases = opt.cases ? opt.cases : 200;
        std::size_t mismatches = 0;
        for (std::size_t c = 0; c < cases; ++c) {
            rng::Gaussian g(rng::substream_seed(opt.seed, 0xDE7EC7ULL + c));
            const std::size_t n = 600 + (c % 1200);
            const std::size_t jump = n / 3 + (c % (n / 2));
            const bool has_event = (c % 4) != 3;
            std::vector<double> s(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = 1.0 + 0.05 * g.next();
                if (has_event && i >= jump) s[i] += 0.8;
            }
            const std::size_t t0 = 20 + (c % 80);
            const std::size_t L = 5 + (c % 60);

            SteSeries ste;
            ste.values = s;
            ste.sampling_rate_hz = 300000.0;
            DetectorConfig cfg;
            cfg.t_start_ms = 0.0;
            cfg.t_end_ms = static_cast<double>(n) / 300.0;
            cfg.t0_ms = static_cast<double>(t0) / 300.0;
            cfg.L_points = L;
            const auto fast = detect_key_moment(ste, cfg);
            std::optional<std::size_t> fast_idx;
            if (fast) fast_idx = static_cast<std::size_t>(std::llround(*fast * 300.0));

            const double floor_v = oracle::default_sigma_floor(s);
            const auto ref = oracle::detect_replay(s, t0, L, cfg.threshold_multiplier, floor_v);
            if (fast_idx != ref) ++mismatches;
        }
        const bool ok = mismatches == 0;
        all_ok = all_ok && ok;
        out << "oracle detector: cases=" << cases << " mismatches=" << mismatches
            << (ok ? " PASS" : " FAIL") << "\n";
    }

    out << "oracle result: " << (all_ok ? "PASS" : "FAIL") << "\n";
    return all_ok;
}

// ----------------------------------------------------------- filter/ste --

inline void cmd_filter(const RunConfig& cfg, const fs::path& in_path, const fs::path& out_path) {
    OperationRecord rec = read_record(in_path, cfg.io.channel_map);
    rec.vibration = band_pass(rec.vibration, cfg.bandpass);
    const RecordFormat format =
        out_path.extension() == ".csv" ? RecordFormat::csv : RecordFormat::binary;
    write_record(from_operation_record(rec, cfg.io.channel_map), out_path, format);
}

inline void cmd_ste(const RunConfig& cfg, const fs::path& in_path, const fs::path& out_path,
                    bool skip_filter) {
    OperationRecord rec = read_record(in_path, cfg.io.channel_map);
    const Waveform w = skip_filter ? rec.vibration : band_pass(rec.vibration, cfg.bandpass);
    const SteSeries ste = short_time_energy(w, cfg.detector_t2.ste_window);
    std::ostringstream csv;
    csv << "index,time_ms,ste\n";
    for (std::size_t i = 0; i < ste.values.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%.9g\n", i,
                      ste.t0_offset_ms + static_cast<double>(i) * 1000.0 / ste.sampling_rate_hz,
                      ste.values[i]);
        csv << buf;
    }
    detail::write_text(out_path, csv.str());
}

// ------------------------------------------------------------------ app --

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Vibration-based key-moment detection for circuit breaker close operations"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    unsigned workers = 0;
    std::optional<std::uint64_t> seed;
    std::string pole;
    std::string format;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--workers", workers, "worker threads (default: CBKM_WORKERS or hardware)");
    app.add_option("--seed", seed, "override the generator seed");
    app.add_option("--pole", pole, "ground-truth pole (A, B or C)")
        ->check(CLI::IsMember({"A", "B", "C", "a", "b", "c"}));
    app.add_option("--format", format, "record format")->check(CLI::IsMember({"csv", "bin"}));

    auto* synth = app.add_subcommand("synth", "generate a synthetic run-to-failure corpus");
    std::size_t synth_ops = 0;
    synth->add_option("--ops", synth_ops, "number of operations");
    synth->fallthrough();

    auto* detect = app.add_subcommand("detect", "detect key moments over a corpus");
    std::string detect_corpus;
    detect->add_option("--corpus", detect_corpus, "corpus directory (with manifest.json)")
        ->required();
    detect->fallthrough();

    auto* eval = app.add_subcommand("eval", "score detections against contact ground truth");
    std::string eval_corpus, eval_detections;
    eval->add_option("--corpus", eval_corpus, "corpus directory")->required();
    eval->add_option("--detections", eval_detections,
                     "detections CSV (default: <out>/detections.csv)");
    eval->fallthrough();

    auto* oracle_cmd = app.add_subcommand("oracle", "verify optimized paths against references");
    OracleOptions oracle_opt;
    oracle_cmd->add_option("--cases", oracle_opt.cases, "cases per check (0: defaults)");
    oracle_cmd->add_flag("--inject-fault", oracle_opt.inject_fault, "")->group("");
    oracle_cmd->fallthrough();

    auto* filter_cmd = app.add_subcommand("filter", "band-pass one record");
    std::string filter_in, filter_out;
    filter_cmd->add_option("--in", filter_in, "input record")->required();
    filter_cmd->add_option("--out-file", filter_out, "output record")->required();
    filter_cmd->fallthrough();

    auto* ste_cmd = app.add_subcommand("ste", "dump the energy envelope of one record");
    std::string ste_in, ste_out;
    bool ste_raw = false;
    ste_cmd->add_option("--in", ste_in, "input record")->required();
    ste_cmd->add_option("--out-file", ste_out, "output CSV")->required();
    ste_cmd->add_flag("--no-filter", ste_raw, "skip the band-pass stage");
    ste_cmd->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (seed) cfg.synth.degradation.seed = *seed;
        if (!pole.empty()) cfg.ground_truth.pole = pole_from_string(pole);
        if (!format.empty())
            cfg.io.format = format == "csv" ? RecordFormat::csv : RecordFormat::binary;
        if (synth->parsed() && synth_ops > 0) cfg.synth.degradation.n_ops = synth_ops;
        const unsigned n_workers = resolve_workers(workers);

        if (synth->parsed()) {
            if (synth->count("--ops") && synth_ops == 0)
                throw ConfigError("synth: --ops must be positive");
            cmd_synth(cfg, out_dir, n_workers);
        } else if (detect->parsed()) {
            cmd_detect(cfg, detect_corpus, out_dir, n_workers);
        } else if (eval->parsed()) {
            const fs::path det = eval_detections.empty()
                                     ? fs::path(out_dir) / "detections.csv"
                                     : fs::path(eval_detections);
            cmd_eval(cfg, det, eval_corpus, out_dir, n_workers);
        } else if (oracle_cmd->parsed()) {
            if (seed) oracle_opt.seed = *seed;
            if (!run_oracles(oracle_opt, std::cout)) return kExitFailure;
        } else if (filter_cmd->parsed()) {
            cmd_filter(cfg, filter_in, filter_out);
        } else if (ste_cmd->parsed()) {
            cmd_ste(cfg, ste_in, ste_out, ste_raw);
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

} // namespace cbkm::cli
