// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "avprune/matrix.hpp"
#include "avprune/sequence.hpp"

namespace avprune {

/// Round half away from zero.
std::size_t round_count(double x);

/// Retains the round(keep_ratio * n) highest-scoring indices (ties keep the
/// lower index). Result is ascending.
std::vector<std::size_t> audio_intra_prune(std::span<const double> scores, double keep_ratio);

struct FrameGrid {
    std::vector<MatrixF> frames;  // F frames of T x d
    std::size_t window_size = 4;
};

struct FrameToken {
    std::size_t frame = 0;
    std::size_t token = 0;

    auto operator<=>(const FrameToken&) const = default;
};

/// Temporal token pruning over windows of consecutive frames: each window's
/// first frame is kept, and the round(prune_rate * |rest|) tokens of the
/// remaining frames most similar to their spatial counterpart in the first
/// frame are dropped (ties drop the higher (frame, token) first). Returns the
/// retained tokens in ascending order.
std::vector<FrameToken> video_ttm(const FrameGrid& grid, double prune_rate);

struct IntraConfig {
    double audio_keep = 0.7;
    double video_prune_rate = 0.8;
    std::size_t frames_per_chunk = 4;
    std::size_t tokens_per_frame = 72;
    /// Seed for synthetic audio saliency when no external scores are given.
    std::uint64_t saliency_seed = 0;
};

struct IntraReport {
    std::size_t audio_before = 0;
    std::size_t audio_after = 0;
    std::size_t video_before = 0;
    std::size_t video_after = 0;

    double audio_retention() const;
    double video_retention() const;
    double combined_retention() const;
};

struct IntraResult {
    InterleavedSequence sequence;
    IntraReport report;
};

/// Removes intra-pruned audio and video tokens chunk by chunk; text tokens and
/// survivor order are untouched. `audio_scores[c]` has one score per audio
/// token of chunk c; `grids[c]` has frames_per_chunk x tokens_per_frame
/// entries matching chunk c's video tokens in frame-major order.
IntraResult apply_intra(const InterleavedSequence& seq, double audio_keep, double video_prune_rate,
                        const std::vector<std::vector<double>>& audio_scores, const std::vector<FrameGrid>& grids);

/// Seeded uniform [0, 1) saliency per audio token of each chunk.
std::vector<std::vector<double>> synth_audio_saliency(const InterleavedSequence& seq, std::uint64_t seed);

/// Lays each chunk's video embeddings out as frames_per_chunk frames of tokens_per_frame.
std::vector<FrameGrid> grids_from_embeddings(const InterleavedSequence& seq, std::size_t frames_per_chunk,
                                             std::size_t tokens_per_frame);

/// apply_intra with synthetic saliency and embedding-derived grids.
IntraResult apply_intra(const InterleavedSequence& seq, const IntraConfig& cfg);

}  // namespace avprune
