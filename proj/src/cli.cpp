// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "CLI11.hpp"
#include "avprune/config.hpp"
#include "avprune/harness.hpp"
#include "avprune/metrics.hpp"
#include "avprune/numerics.hpp"
#include "avprune/schedule.hpp"
#include "avprune/tensor_io.hpp"
#include "json.hpp"

namespace avprune::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Optional overrides shared by schedule and simulate.
struct ScheduleFlags {
    std::optional<std::string> kind;
    std::optional<double> p_init;
    std::optional<double> p_final;
    std::optional<double> t_mid;
    std::optional<double> beta;
    std::optional<std::size_t> layers;

    void add_to(CLI::App& app) {
        app.add_option("--kind", kind, "sigmoid | exponential");
        app.add_option("--p-init", p_init, "Initial pruning ratio");
        app.add_option("--p-final", p_final, "Final pruning ratio");
        app.add_option("--t-mid", t_mid, "Sigmoid midpoint (fraction of depth)");
        app.add_option("--beta", beta, "Sigmoid slope");
        app.add_option("--layers", layers, "Decoder layer count L");
    }

    void overlay(json& j) const {
        if (kind) {
            j["schedule"]["kind"] = *kind;
        }
        if (p_init) {
            j["schedule"]["p_init"] = *p_init;
        }
        if (p_final) {
            j["schedule"]["p_final"] = *p_final;
        }
        if (t_mid) {
            j["schedule"]["t_mid"] = *t_mid;
        }
        if (beta) {
            j["schedule"]["beta"] = *beta;
        }
        if (layers) {
            j["model"]["L"] = *layers;
        }
    }
};

ExperimentConfig resolve_config(const std::string& config_path, const json& overlay) {
    ExperimentConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    if (!overlay.is_null() && !overlay.empty()) {
        cfg = merge_config(cfg, overlay);
    }
    return cfg;
}

std::string fmt(double v, int precision = 10) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

void ensure_readable(const std::string& path, const char* what) {
    if (path.empty()) {
        throw Error(ErrorKind::kSchemaError, std::string("missing required input: ") + what);
    }
    if (!fs::exists(path)) {
        throw Error(ErrorKind::kSchemaError, std::string(what) + " '" + path + "' does not exist");
    }
}

// Writes to `path` when given, otherwise to `out`.
template <typename Fn>
void emit(const std::string& path, std::ostream& out, Fn&& fn) {
    if (path.empty()) {
        fn(out);
        return;
    }
    std::ofstream file(path, std::ios::trunc);
    if (!file) {
        throw Error(ErrorKind::kIoError, "cannot open '" + path + "' for writing");
    }
    fn(file);
}

void write_retention_csv(std::ostream& os, const PruneTrace& trace) {
    os << "# config_digest=" << trace.config_digest << "\n";
    os << "layer,n_audio,n_video,n_text,audio_ratio,video_ratio\n";
    const RetentionSeries series = retention_per_modality(trace);
    for (std::size_t l = 0; l < trace.layers.size(); ++l) {
        const auto& r = trace.layers[l];
        os << l << ',' << r.n_audio << ',' << r.n_video << ',' << r.n_text << ',' << fmt(series.audio[l]) << ','
           << fmt(series.video[l]) << "\n";
    }
}

struct SimulateOutcome {
    std::string digest;
    fs::path dir;
};

SimulateOutcome simulate_one(const ExperimentConfig& cfg, const fs::path& dir, bool dump_attention,
                             const std::string& inject_dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::kIoError, "cannot create '" + dir.string() + "': " + ec.message());
    }
    const std::string digest = config_digest(cfg);
    const InterleavedSequence seq = cfg.build_sequence();
    const RunConfig run = cfg.run_config();

    std::optional<AttentionDumper> dumper;
    AttentionObserver observer;
    if (dump_attention) {
        dumper.emplace(dir / "attention", digest);
        observer = [&dumper](const LayerAttention& la) { (*dumper)(la); };
    }

    PruneTrace trace;
    if (!inject_dir.empty()) {
        if (!fs::is_directory(inject_dir)) {
            throw Error(ErrorKind::kIoError, "inject directory '" + inject_dir + "' does not exist");
        }
        trace = run_with_injected_attention(seq, attention_source_from_dir(inject_dir), run, observer);
    } else {
        const ToyDecoder model = cfg.build_model();
        trace = run_with_pruning(seq, model, run, observer);
    }
    trace.config_digest = digest;
    if (dumper) {
        dumper->finish();
    }

    write_trace_jsonl(dir / "trace.jsonl", trace);
    emit((dir / "retention.csv").string(), std::cout, [&](std::ostream& os) { write_retention_csv(os, trace); });
    write_layout_jsonl(dir / "layout.jsonl", seq, digest);
    write_matrix(dir / "embeddings.omtn", seq.embeddings);
    emit((dir / "config.json").string(), std::cout, [&](std::ostream& os) { os << to_json(cfg).dump(2) << "\n"; });
    return {hex64(trace.digest()), dir};
}

int cmd_calibrate(double target, double r0, std::size_t layers, double beta, double t_mid, double p_init,
                  std::ostream& out) {
    PruneScheduleConfig cfg;
    cfg.layers = layers;
    cfg.beta = beta;
    cfg.t_mid = t_mid;
    cfg.p_init = p_init;
    cfg.p_final = p_init;
    cfg.validate();
    const Calibration cal = calibrate_p_final(target, r0, cfg);
    out << "closed_form_p_final=" << (cal.closed_form ? fmt(*cal.closed_form) : std::string("NA")) << "\n";
    out << "bisection_p_final=" << fmt(cal.bisection) << "\n";
    out << "achieved_mean=" << fmt(cal.achieved_mean) << "\n";
    if (cal.closed_form) {
        PruneScheduleConfig at = cfg;
        at.p_final = *cal.closed_form;
        out << "closed_form_mean=" << fmt(mean_retention(at, r0)) << "\n";
    }
    return kOk;
}

int cmd_schedule(const ExperimentConfig& cfg, double r0, const std::string& out_path, std::ostream& out) {
    const RetentionTrace trace = retention_trace(cfg.schedule, r0);
    emit(out_path, out, [&](std::ostream& os) {
        os << "# config_digest=" << config_digest(cfg) << " r0=" << fmt(r0) << "\n";
        os << "l,p_l,r_l\n";
        for (std::size_t l = 0; l < cfg.schedule.layers; ++l) {
            os << l << ',' << fmt(prune_ratio(l, cfg.schedule), 12) << ',' << fmt(trace.r[l], 12) << "\n";
        }
        os << "# mean_retention=" << fmt(trace.mean(), 12) << "\n";
    });
    return kOk;
}

struct AnalyzeArgs {
    std::string metric;
    std::string trace;
    std::string embeddings;
    std::string layout;
    std::string attention;
    std::string ids;
    std::string modality = "av";
    std::string pair = "AV";
    bool per_row = false;
    bool include_system = false;
    std::size_t sample_cap = 200000;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
    if (a.metric == "retention") {
        ensure_readable(a.trace, "--trace");
        const PruneTrace trace = read_trace_jsonl(fs::path(a.trace));
        emit(a.out, out, [&](std::ostream& os) { write_retention_csv(os, trace); });
        return kOk;
    }
    if (a.metric == "recall") {
        ensure_readable(a.attention, "--attention");
        ensure_readable(a.layout, "--layout");
        std::string ids_path = a.ids;
        if (ids_path.empty()) {
            ids_path = fs::path(a.attention).replace_extension(".ids").string();
        }
        ensure_readable(ids_path, "--ids");
        const RecordedAttention rec = read_recorded_attention(a.attention, ids_path);
        const LayoutFile layout = read_layout_jsonl(fs::path(a.layout));
        std::unordered_map<TokenId, Modality> modality_of;
        for (const auto& t : layout.sequence.tokens) {
            modality_of.emplace(t.id, t.modality);
        }
        auto wanted_col = [&](Modality m) {
            if (a.modality == "audio") {
                return m == Modality::kAudio;
            }
            if (a.modality == "video") {
                return m == Modality::kVideo;
            }
            return is_audiovisual(m);
        };
        if (a.modality != "audio" && a.modality != "video" && a.modality != "av") {
            throw Error(ErrorKind::kConfigError, "--modality must be audio, video or av");
        }
        std::vector<std::size_t> rows;
        std::vector<std::size_t> cols;
        for (std::size_t i = 0; i < rec.ids.size(); ++i) {
            auto it = modality_of.find(rec.ids[i]);
            if (it == modality_of.end()) {
                throw Error(ErrorKind::kSchemaError, "token id " + std::to_string(rec.ids[i]) + " not in layout");
            }
            if (it->second == Modality::kQueryText || (a.include_system && it->second == Modality::kSystemText)) {
                rows.push_back(i);
            }
            if (wanted_col(it->second)) {
                cols.push_back(i);
            }
        }
        if (rows.empty() || cols.empty()) {
            throw Error(ErrorKind::kSchemaError, "attention map has no text rows or no matching columns");
        }
        MatrixD sub(rows.size(), cols.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t c = 0; c < cols.size(); ++c) {
                sub(r, c) = rec.attention(rows[r], cols[c]);
            }
        }
        const double recall = top20_recall(sub, a.per_row ? RecallMode::kPerRow : RecallMode::kFlattened);
        json j{{"metric", "recall"},
               {"config_digest", layout.config_digest},
               {"modality", a.modality},
               {"mode", a.per_row ? "per_row" : "flattened"},
               {"entries", sub.data().size()},
               {"recall", recall}};
        emit(a.out, out, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
        return kOk;
    }
    if (a.metric == "cosine" || a.metric == "pca") {
        ensure_readable(a.embeddings, "--embeddings");
        const MatrixF emb = read_matrix(fs::path(a.embeddings));
        std::vector<Modality> tags;
        std::string digest;
        if (!a.layout.empty()) {
            ensure_readable(a.layout, "--layout");
            const LayoutFile layout = read_layout_jsonl(fs::path(a.layout));
            digest = layout.config_digest;
            for (const auto& t : layout.sequence.tokens) {
                tags.push_back(t.modality);
            }
            if (tags.size() != emb.rows()) {
                throw Error(ErrorKind::kSchemaError, "layout token count does not match embedding rows");
            }
        } else if (a.metric == "cosine") {
            throw Error(ErrorKind::kSchemaError, "cosine needs --layout for modality tags");
        }
        if (a.metric == "cosine") {
            Rng rng(a.seed);
            const CosineHistogram hist = cosine_distribution(emb, tags, pair_kind_from_string(a.pair), a.sample_cap, rng);
            emit(a.out, out, [&](std::ostream& os) {
                os << "# config_digest=" << digest << " pair=" << a.pair << " pairs=" << hist.total()
                   << " mean=" << fmt(hist.mean()) << " p95=" << fmt(hist.quantile(0.95)) << "\n";
                os << "bin_lower,bin_upper,count\n";
                for (std::size_t b = 0; b < CosineHistogram::kBins; ++b) {
                    os << fmt(hist.bin_lower(b), 4) << ',' << fmt(hist.bin_lower(b) + CosineHistogram::kWidth, 4)
                       << ',' << hist.counts[b] << "\n";
                }
            });
            return kOk;
        }
        MatrixD rows(emb.rows(), emb.cols());
        for (std::size_t i = 0; i < emb.data().size(); ++i) {
            rows.data()[i] = emb.data()[i];
        }
        const Pca2Result pca = pca2(rows);
        emit(a.out, out, [&](std::ostream& os) {
            os << "# config_digest=" << digest << " eigenvalues=" << fmt(pca.eigenvalues[0]) << ','
               << fmt(pca.eigenvalues[1]) << "\n";
            os << "row,modality,pc1,pc2\n";
            for (std::size_t r = 0; r < emb.rows(); ++r) {
                os << r << ',' << (tags.empty() ? std::string_view("unknown") : to_string(tags[r])) << ','
                   << fmt(pca.projection(r, 0)) << ',' << fmt(pca.projection(r, 1)) << "\n";
            }
        });
        return kOk;
    }
    throw Error(ErrorKind::kConfigError, "--metric must be recall, retention, cosine or pca");
}

int cmd_cost(const std::string& trace_path, std::size_t d, std::size_t bytes, const std::string& out_path,
             std::ostream& out) {
    ensure_readable(trace_path, "--trace");
    if (bytes != 2 && bytes != 4) {
        throw Error(ErrorKind::kConfigError, "--bytes must be 2 or 4");
    }
    const PruneTrace trace = read_trace_jsonl(fs::path(trace_path));
    const CostReport report = cost_model(trace, d, bytes);
    json layers = json::array();
    for (std::size_t l = 0; l < report.layers.size(); ++l) {
        const auto& p = report.layers[l];
        layers.push_back({{"layer", p.layer},
                          {"tokens", p.tokens},
                          {"projection_flops", p.projection_flops},
                          {"attention_flops", p.attention_flops},
                          {"kv_bytes", p.kv_bytes},
                          {"baseline_tokens", report.baseline[l].tokens}});
    }
    json j{{"config_digest", trace.config_digest},
           {"note", "FLOPs_layer(n) = 24*n*d^2 + 4*n^2*d (causal attention counted as full n^2); "
                    "KV bytes = sum_l 2*n_l*d*bytes_per_element; baseline keeps the unpruned count"},
           {"d", d},
           {"bytes_per_element", bytes},
           {"total_flops", report.total_flops},
           {"baseline_flops", report.baseline_flops},
           {"attention_flops", report.attention_flops},
           {"baseline_attention_flops", report.baseline_attention_flops},
           {"projection_flops", report.projection_flops},
           {"baseline_projection_flops", report.baseline_projection_flops},
           {"kv_bytes", report.kv_bytes},
           {"baseline_kv_bytes", report.baseline_kv_bytes},
           {"flops_ratio", report.flops_ratio()},
           {"attention_ratio", report.attention_ratio()},
           {"projection_ratio", report.projection_ratio()},
           {"memory_ratio", report.memory_ratio()},
           {"layers", layers}};
    emit(out_path, out, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
    return kOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::kInfeasible:
        return kInfeasible;
    case ErrorKind::kIoError:
        return kIo;
    case ErrorKind::kSchemaError:
        return kSchema;
    default:
        return kConfig;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Layer-wise audiovisual token pruning toolkit"};
    app.require_subcommand(1);

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Solve for p_final hitting a target mean retention");
    double target = 0.0;
    double r0 = 0.45;
    std::size_t cal_layers = 28;
    double cal_beta = 20.0;
    double cal_t_mid = 0.5;
    double cal_p_init = 0.0;
    calibrate->add_option("--target", target, "Target mean retained ratio")->required();
    calibrate->add_option("--r0", r0, "Retained ratio entering layer 0");
    calibrate->add_option("--layers", cal_layers, "Decoder layer count L");
    calibrate->add_option("--beta", cal_beta, "Sigmoid slope");
    calibrate->add_option("--t-mid", cal_t_mid, "Sigmoid midpoint");
    calibrate->add_option("--p-init", cal_p_init, "Initial pruning ratio");

    // schedule
    auto* schedule = app.add_subcommand("schedule", "Tabulate p_l and r_l per layer");
    std::string sched_config;
    ScheduleFlags sched_flags;
    double sched_r0 = 1.0;
    std::string sched_out;
    schedule->add_option("--config", sched_config, "Experiment config JSON");
    sched_flags.add_to(*schedule);
    schedule->add_option("--r0", sched_r0, "Retained ratio entering layer 0");
    schedule->add_option("--out", sched_out, "CSV output path (default stdout)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run the pruning harness and write its artifacts");
    std::string sim_config;
    std::string sim_out;
    bool dump_attention = false;
    std::string inject;
    ScheduleFlags sim_flags;
    std::optional<std::string> sim_selector;
    std::optional<std::uint64_t> sim_seed;
    std::optional<std::size_t> sim_workers;
    std::size_t runs = 1;
    simulate->add_option("--config", sim_config, "Experiment config JSON");
    simulate->add_option("--out", sim_out, "Output directory")->required();
    simulate->add_flag("--dump-attention", dump_attention, "Write per-layer attention tensors");
    simulate->add_option("--inject", inject, "Replay attention tensors from a dump directory");
    sim_flags.add_to(*simulate);
    simulate->add_option("--selector", sim_selector, "plain | tds | random");
    simulate->add_option("--seed", sim_seed, "Seed for both the sequence and the model");
    simulate->add_option("--workers", sim_workers, "Parallel runs");
    simulate->add_option("--runs", runs, "Independent seeds to fan out (outputs in run_NNN/)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Diagnostics over traces, attention dumps and embeddings");
    AnalyzeArgs aa;
    analyze->add_option("--metric", aa.metric, "recall | retention | cosine | pca")->required();
    analyze->add_option("--trace", aa.trace, "Trace JSONL");
    analyze->add_option("--embeddings", aa.embeddings, "Embedding tensor (OMTN)");
    analyze->add_option("--layout", aa.layout, "Sequence layout JSONL");
    analyze->add_option("--attention", aa.attention, "Attention tensor (OMTN)");
    analyze->add_option("--ids", aa.ids, "Attention id sidecar (default: <attention>.ids)");
    analyze->add_option("--modality", aa.modality, "Recall columns: audio | video | av");
    analyze->add_option("--pair", aa.pair, "Cosine pairs: AA | VV | AV");
    analyze->add_flag("--per-row", aa.per_row, "Per-row recall instead of flattened");
    analyze->add_flag("--include-system", aa.include_system, "Count system-prompt rows in recall");
    analyze->add_option("--sample-cap", aa.sample_cap, "Maximum cosine pairs (0 = all)");
    analyze->add_option("--seed", aa.seed, "Pair-sampling seed");
    analyze->add_option("--out", aa.out, "Output path (default stdout)");

    // cost
    auto* cost = app.add_subcommand("cost", "Analytic FLOPs and KV-memory estimate from a trace");
    std::string cost_trace;
    std::size_t cost_d = 0;
    std::size_t cost_bytes = 2;
    std::string cost_out;
    cost->add_option("--trace", cost_trace, "Trace JSONL");
    cost->add_option("--d", cost_d, "Model width")->required();
    cost->add_option("--bytes", cost_bytes, "Bytes per KV element (2 or 4)");
    cost->add_option("--out", cost_out, "Output path (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (calibrate->parsed()) {
            return cmd_calibrate(target, r0, cal_layers, cal_beta, cal_t_mid, cal_p_init, out);
        }
        if (schedule->parsed()) {
            json overlay = json::object();
            sched_flags.overlay(overlay);
            ExperimentConfig cfg = resolve_config(sched_config, overlay);
            return cmd_schedule(cfg, sched_r0, sched_out, out);
        }
        if (simulate->parsed()) {
            json overlay = json::object();
            sim_flags.overlay(overlay);
            if (sim_selector) {
                overlay["selector"] = *sim_selector;
            }
            if (sim_seed) {
                overlay["sequence"]["seed"] = *sim_seed;
                overlay["model"]["seed"] = *sim_seed;
            }
            if (sim_workers) {
                overlay["workers"] = *sim_workers;
            }
            const ExperimentConfig cfg = resolve_config(sim_config, overlay);
            if (runs == 0) {
                throw Error(ErrorKind::kConfigError, "--runs must be >= 1");
            }
            if (runs == 1) {
                const auto outcome = simulate_one(cfg, sim_out, dump_attention, inject);
                out << "digest=" << outcome.digest << "\n";
                return kOk;
            }
            // Independent seeds; each worker owns its run state and output directory.
            std::vector<std::optional<SimulateOutcome>> outcomes(runs);
            std::vector<std::optional<Error>> failures(runs);
            std::atomic<std::size_t> next{0};
            auto worker = [&]() {
                for (std::size_t i = next++; i < runs; i = next++) {
                    std::ostringstream name;
                    name << "run_" << std::setw(3) << std::setfill('0') << i;
                    const fs::path dir = fs::path(sim_out) / name.str();
                    const std::string inject_i = inject.empty() ? inject : (fs::path(inject) / name.str()).string();
                    try {
                        outcomes[i] = simulate_one(with_run_offset(cfg, i), dir, dump_attention, inject_i);
                    } catch (const Error& e) {
                        failures[i] = e;
                    }
                }
            };
            std::vector<std::thread> pool;
            const std::size_t n_workers = std::min(cfg.workers, runs);
            for (std::size_t w = 0; w < n_workers; ++w) {
                pool.emplace_back(worker);
            }
            for (auto& t : pool) {
                t.join();
            }
            for (std::size_t i = 0; i < runs; ++i) {
                if (failures[i]) {
                    throw *failures[i];
                }
                out << "run=" << i << " digest=" << outcomes[i]->digest << "\n";
            }
            return kOk;
        }
        if (analyze->parsed()) {
            return cmd_analyze(aa, out);
        }
        if (cost->parsed()) {
            return cmd_cost(cost_trace, cost_d, cost_bytes, cost_out, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    }
    return kConfig;
}

}  // namespace avprune::cli
