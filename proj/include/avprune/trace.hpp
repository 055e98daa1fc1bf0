// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avprune/intra_pruning.hpp"
#include "avprune/sequence.hpp"

namespace avprune {

/// State of one decoder layer: counts of tokens entering it and what was
/// removed after it.
struct LayerRecord {
    std::size_t layer = 0;
    double p_l = 0.0;
    std::size_t k_l = 0;
    std::vector<TokenId> pruned_ids;  // ascending
    std::size_t n_audio = 0;
    std::size_t n_video = 0;
    std::size_t n_text = 0;
    std::string selector;

    std::size_t total() const noexcept {
        return n_audio + n_video + n_text;
    }
    bool operator==(const LayerRecord&) const = default;
};

struct PruneTrace {
    std::vector<LayerRecord> layers;
    /// Token count before any pruning, intra-modality included.
    std::size_t original_tokens = 0;
    std::optional<IntraReport> intra;
    std::string config_digest;

    double audio_retention(std::size_t layer) const;
    double video_retention(std::size_t layer) const;
    /// Audiovisual tokens still present after the last layer.
    std::size_t final_audiovisual() const;

    /// FNV-1a 64 over the canonical per-layer JSON lines.
    std::uint64_t digest() const;
};

/// One compact JSON object with keys
/// {layer, p_l, k_l, pruned_ids, n_audio, n_video, n_text, selector}.
std::string canonical_layer_json(const LayerRecord& record);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xCBF29CE484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace avprune
