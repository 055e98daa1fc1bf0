// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "avprune/decoder.hpp"
#include "avprune/harness.hpp"
#include "avprune/sequence.hpp"
#include "json.hpp"

namespace avprune {

struct SequenceSettings {
    std::size_t sys_len = 4;
    std::size_t m = 4;
    std::size_t n_v = 288;
    std::size_t n_a = 50;
    std::size_t query_len = 8;
    std::size_t d = 64;
    std::uint64_t seed = 0;
};

struct ModelSettings {
    std::size_t L = 28;
    std::size_t H = 4;
    std::size_t d = 64;
    std::uint64_t seed = 0;
};

struct IntraSettings {
    bool enabled = true;
    double audio_keep = 0.7;
    double video_prune_rate = 0.8;
    std::size_t frames_per_chunk = 4;
    std::size_t tokens_per_frame = 72;
};

/// Full experiment description. JSON keys mirror the field names:
/// sequence.{sys_len,m,n_v,n_a,query_len,d,seed}, model.{L,H,d,seed},
/// schedule.{kind,p_init,p_final,t_mid,beta}, tds.{lambda_div,start_layer},
/// intra.{enabled,audio_keep,video_prune_rate,frames_per_chunk,tokens_per_frame},
/// selector, workers, include_system_rows.
struct ExperimentConfig {
    SequenceSettings sequence;
    ModelSettings model;
    PruneScheduleConfig schedule;  // schedule.layers follows model.L
    TdsConfig tds;                 // start_layer defaults to L / 2
    IntraSettings intra;
    Selector selector = Selector::kTds;
    std::size_t workers = 1;
    bool include_system_rows = false;

    /// Throws ConfigError naming the offending key path.
    void validate() const;

    InterleavedSequence build_sequence() const;
    ToyDecoder build_model() const;
    RunConfig run_config() const;
};

ExperimentConfig default_config();

/// Overlays `j` onto `base`. Unknown keys and out-of-range values raise
/// ConfigError with the key path.
ExperimentConfig merge_config(const ExperimentConfig& base, const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& cfg);
/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_digest(const ExperimentConfig& cfg);

/// Copy with every seed offset by `run` (independent fan-out runs).
ExperimentConfig with_run_offset(const ExperimentConfig& cfg, std::size_t run);

}  // namespace avprune
