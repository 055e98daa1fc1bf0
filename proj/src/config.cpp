// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/config.hpp"

#include <fstream>
#include <set>

#include "avprune/error.hpp"
#include "avprune/numerics.hpp"

namespace avprune {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& path, const std::string& message) {
    throw Error(ErrorKind::kConfigError, path + ": " + message);
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
        config_error(path.empty() ? "<root>" : path, "expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            config_error(path.empty() ? key : path + "." + key, "unknown key");
        }
    }
}

template <typename T>
void read(const json& j, const std::string& parent, const char* key, T& out) {
    if (!j.contains(key)) {
        return;
    }
    const std::string path = parent + "." + key;
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) {
            config_error(path, "expected a boolean");
        }
        out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
            config_error(path, "expected a non-negative integer");
        }
        out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) {
            config_error(path, "expected a number");
        }
        out = v.get<T>();
    } else {
        if (!v.is_string()) {
            config_error(path, "expected a string");
        }
        out = v.get<T>();
    }
}

void in_range(bool ok, const std::string& path, const std::string& what) {
    if (!ok) {
        config_error(path, "must be " + what);
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    in_range(sequence.query_len >= 1, "sequence.query_len", ">= 1");
    in_range(sequence.m >= 1, "sequence.m", ">= 1");
    in_range(sequence.n_v + sequence.n_a >= 1, "sequence.n_v", "positive when sequence.n_a is 0");
    in_range(sequence.d >= 2, "sequence.d", ">= 2");
    in_range(model.L >= 3, "model.L", ">= 3");
    in_range(model.H >= 1, "model.H", ">= 1");
    in_range(model.d == sequence.d, "model.d", "equal to sequence.d");
    in_range(model.d % model.H == 0, "model.d", "divisible by model.H");
    in_range(schedule.p_init >= 0.0 && schedule.p_init < 1.0, "schedule.p_init", "in [0, 1)");
    in_range(schedule.p_final >= 0.0 && schedule.p_final < 1.0, "schedule.p_final", "in [0, 1)");
    in_range(schedule.p_init <= schedule.p_final, "schedule.p_init", "<= schedule.p_final");
    in_range(schedule.t_mid > 0.0 && schedule.t_mid < 1.0, "schedule.t_mid", "in (0, 1)");
    in_range(schedule.beta > 0.0, "schedule.beta", "> 0");
    in_range(schedule.kind != ScheduleKind::kExponential || schedule.p_init > 0.0, "schedule.p_init",
             "> 0 for the exponential schedule");
    in_range(schedule.layers == model.L, "schedule", "consistent with model.L");
    in_range(tds.lambda_div >= 0.0, "tds.lambda_div", ">= 0");
    if (intra.enabled) {
        in_range(intra.audio_keep > 0.0 && intra.audio_keep <= 1.0, "intra.audio_keep", "in (0, 1]");
        in_range(intra.video_prune_rate >= 0.0 && intra.video_prune_rate < 1.0, "intra.video_prune_rate",
                 "in [0, 1)");
        in_range(sequence.n_v == 0 || intra.frames_per_chunk * intra.tokens_per_frame == sequence.n_v,
                 "intra.frames_per_chunk", "such that frames_per_chunk * tokens_per_frame == sequence.n_v");
    }
    in_range(workers >= 1, "workers", ">= 1");
}

InterleavedSequence ExperimentConfig::build_sequence() const {
    return avprune::build_sequence(sequence.sys_len, uniform_chunks(sequence.m, sequence.n_v, sequence.n_a),
                                   sequence.query_len, sequence.d, sequence.seed);
}

ToyDecoder ExperimentConfig::build_model() const {
    return ToyDecoder(model.L, model.H, model.d, model.seed);
}

RunConfig ExperimentConfig::run_config() const {
    RunConfig run;
    run.schedule = schedule;
    run.tds = tds;
    run.selector = selector;
    run.include_system_rows = include_system_rows;
    run.selector_seed = derive_seed(model.seed, 0x5E1EC7);
    if (intra.enabled) {
        IntraConfig ic;
        ic.audio_keep = intra.audio_keep;
        ic.video_prune_rate = intra.video_prune_rate;
        ic.frames_per_chunk = intra.frames_per_chunk;
        ic.tokens_per_frame = intra.tokens_per_frame;
        ic.saliency_seed = derive_seed(sequence.seed, 0xA0D10);
        run.intra = ic;
    }
    return run;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.schedule.layers = cfg.model.L;
    cfg.tds.start_layer = cfg.model.L / 2;
    return cfg;
}

ExperimentConfig merge_config(const ExperimentConfig& base, const json& j) {
    ExperimentConfig cfg = base;
    check_keys(j, "", {"sequence", "model", "schedule", "tds", "intra", "selector", "workers", "include_system_rows"});
    bool start_layer_given = false;
    const std::size_t old_layers = cfg.model.L;
    if (j.contains("sequence")) {
        const json& s = j["sequence"];
        check_keys(s, "sequence", {"sys_len", "m", "n_v", "n_a", "query_len", "d", "seed"});
        read(s, "sequence", "sys_len", cfg.sequence.sys_len);
        read(s, "sequence", "m", cfg.sequence.m);
        read(s, "sequence", "n_v", cfg.sequence.n_v);
        read(s, "sequence", "n_a", cfg.sequence.n_a);
        read(s, "sequence", "query_len", cfg.sequence.query_len);
        read(s, "sequence", "d", cfg.sequence.d);
        read(s, "sequence", "seed", cfg.sequence.seed);
    }
    if (j.contains("model")) {
        const json& m = j["model"];
        check_keys(m, "model", {"L", "H", "d", "seed"});
        read(m, "model", "L", cfg.model.L);
        read(m, "model", "H", cfg.model.H);
        read(m, "model", "d", cfg.model.d);
        read(m, "model", "seed", cfg.model.seed);
    }
    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        check_keys(s, "schedule", {"kind", "p_init", "p_final", "t_mid", "beta"});
        std::string kind(to_string(cfg.schedule.kind));
        read(s, "schedule", "kind", kind);
        try {
            cfg.schedule.kind = schedule_kind_from_string(kind);
        } catch (const Error&) {
            config_error("schedule.kind", "expected 'sigmoid' or 'exponential'");
        }
        read(s, "schedule", "p_init", cfg.schedule.p_init);
        read(s, "schedule", "p_final", cfg.schedule.p_final);
        read(s, "schedule", "t_mid", cfg.schedule.t_mid);
        read(s, "schedule", "beta", cfg.schedule.beta);
    }
    if (j.contains("tds")) {
        const json& t = j["tds"];
        check_keys(t, "tds", {"lambda_div", "start_layer"});
        read(t, "tds", "lambda_div", cfg.tds.lambda_div);
        start_layer_given = t.contains("start_layer");
        read(t, "tds", "start_layer", cfg.tds.start_layer);
    }
    if (j.contains("intra")) {
        const json& i = j["intra"];
        check_keys(i, "intra", {"enabled", "audio_keep", "video_prune_rate", "frames_per_chunk", "tokens_per_frame"});
        read(i, "intra", "enabled", cfg.intra.enabled);
        read(i, "intra", "audio_keep", cfg.intra.audio_keep);
        read(i, "intra", "video_prune_rate", cfg.intra.video_prune_rate);
        read(i, "intra", "frames_per_chunk", cfg.intra.frames_per_chunk);
        read(i, "intra", "tokens_per_frame", cfg.intra.tokens_per_frame);
    }
    if (j.contains("selector")) {
        std::string sel;
        read(j, "", "selector", sel);
        try {
            cfg.selector = selector_from_string(sel);
        } catch (const Error&) {
            config_error("selector", "expected 'plain', 'tds' or 'random'");
        }
    }
    read(j, "", "workers", cfg.workers);
    read(j, "", "include_system_rows", cfg.include_system_rows);

    cfg.schedule.layers = cfg.model.L;
    // Keep the mid-depth default when only the depth changed.
    if (!start_layer_given && cfg.tds.start_layer == old_layers / 2) {
        cfg.tds.start_layer = cfg.model.L / 2;
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::kConfigError, "cannot open config '" + path.string() + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::kConfigError, path.string() + ": invalid JSON (" + e.what() + ")");
    }
    return merge_config(default_config(), j);
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["sequence"] = {{"sys_len", cfg.sequence.sys_len}, {"m", cfg.sequence.m},
                     {"n_v", cfg.sequence.n_v},         {"n_a", cfg.sequence.n_a},
                     {"query_len", cfg.sequence.query_len}, {"d", cfg.sequence.d},
                     {"seed", cfg.sequence.seed}};
    j["model"] = {{"L", cfg.model.L}, {"H", cfg.model.H}, {"d", cfg.model.d}, {"seed", cfg.model.seed}};
    j["schedule"] = {{"kind", std::string(to_string(cfg.schedule.kind))},
                     {"p_init", cfg.schedule.p_init},
                     {"p_final", cfg.schedule.p_final},
                     {"t_mid", cfg.schedule.t_mid},
                     {"beta", cfg.schedule.beta}};
    j["tds"] = {{"lambda_div", cfg.tds.lambda_div}, {"start_layer", cfg.tds.start_layer}};
    j["intra"] = {{"enabled", cfg.intra.enabled},
                  {"audio_keep", cfg.intra.audio_keep},
                  {"video_prune_rate", cfg.intra.video_prune_rate},
                  {"frames_per_chunk", cfg.intra.frames_per_chunk},
                  {"tokens_per_frame", cfg.intra.tokens_per_frame}};
    j["selector"] = std::string(to_string(cfg.selector));
    j["workers"] = cfg.workers;
    j["include_system_rows"] = cfg.include_system_rows;
    return j;
}

std::string config_digest(const ExperimentConfig& cfg) {
    json j = to_json(cfg);
    // Worker count does not affect results.
    j.erase("workers");
    return hex64(fnv1a64(j.dump()));
}

ExperimentConfig with_run_offset(const ExperimentConfig& cfg, std::size_t run) {
    ExperimentConfig out = cfg;
    out.sequence.seed = cfg.sequence.seed + run;
    out.model.seed = cfg.model.seed + run;
    return out;
}

}  // namespace avprune
