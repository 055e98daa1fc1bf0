// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/trace.hpp"

#include <cstdio>

#include "json.hpp"

namespace avprune {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string canonical_layer_json(const LayerRecord& record) {
    nlohmann::json j;
    j["layer"] = record.layer;
    j["p_l"] = record.p_l;
    j["k_l"] = record.k_l;
    j["pruned_ids"] = record.pruned_ids;
    j["n_audio"] = record.n_audio;
    j["n_video"] = record.n_video;
    j["n_text"] = record.n_text;
    j["selector"] = record.selector;
    return j.dump();
}

double PruneTrace::audio_retention(std::size_t layer) const {
    const std::size_t base = layers.empty() ? 0 : layers.front().n_audio;
    return base == 0 ? 1.0 : static_cast<double>(layers.at(layer).n_audio) / static_cast<double>(base);
}

double PruneTrace::video_retention(std::size_t layer) const {
    const std::size_t base = layers.empty() ? 0 : layers.front().n_video;
    return base == 0 ? 1.0 : static_cast<double>(layers.at(layer).n_video) / static_cast<double>(base);
}

std::size_t PruneTrace::final_audiovisual() const {
    if (layers.empty()) {
        return 0;
    }
    const auto& last = layers.back();
    return last.n_audio + last.n_video - last.pruned_ids.size();
}

std::uint64_t PruneTrace::digest() const {
    std::uint64_t hash = fnv1a64("");
    for (const auto& record : layers) {
        hash = fnv1a64(canonical_layer_json(record), hash);
        hash = fnv1a64("\n", hash);
    }
    return hash;
}

}  // namespace avprune
