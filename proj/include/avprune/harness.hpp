// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "avprune/decoder.hpp"
#include "avprune/importance.hpp"
#include "avprune/intra_pruning.hpp"
#include "avprune/schedule.hpp"
#include "avprune/sequence.hpp"
#include "avprune/trace.hpp"

namespace avprune {

struct RunConfig {
    PruneScheduleConfig schedule;
    TdsConfig tds;
    Selector selector = Selector::kTds;
    std::optional<IntraConfig> intra;
    /// Stream for the random selector.
    std::uint64_t selector_seed = 0;
    /// Adds system-prompt rows to the importance average.
    bool include_system_rows = false;
};

/// Head-averaged attention over the tokens entering `layer`, rows and columns
/// in `ids` order.
struct LayerAttention {
    std::size_t layer;
    const std::vector<TokenId>& ids;
    const MatrixF& attention;
};

using AttentionObserver = std::function<void(const LayerAttention&)>;

/// Supplies the attention for a layer given the tokens entering it. The
/// returned matrix must be n x n in `survivors.tokens` order.
using AttentionProvider = std::function<MatrixF(std::size_t layer, const InterleavedSequence& survivors)>;

/// Externally recorded attention for one layer: square matrix indexed by `ids`
/// in any order.
struct RecordedAttention {
    std::vector<TokenId> ids;
    MatrixF attention;
};

/// Returns the recording for a layer; throws InvalidInput when it is missing.
using AttentionSource = std::function<RecordedAttention(std::size_t layer)>;

/// Layer loop shared by the model-driven and replay-driven runs.
PruneTrace run_pipeline(const InterleavedSequence& seq, const RunConfig& cfg, const AttentionProvider& provider,
                        const AttentionObserver& observer = {});

PruneTrace run_with_pruning(const InterleavedSequence& seq, const ToyDecoder& model, const RunConfig& cfg,
                            const AttentionObserver& observer = {});

PruneTrace run_with_injected_attention(const InterleavedSequence& seq, const AttentionSource& source,
                                       const RunConfig& cfg, const AttentionObserver& observer = {});

/// Permutes a recording into `ids` order. Throws SchemaError when the id sets differ.
MatrixF reindex_attention(const RecordedAttention& recorded, const std::vector<TokenId>& ids);

/// Text-to-audiovisual restriction used for scoring.
AttentionMap text_to_av_map(const InterleavedSequence& survivors, const MatrixF& attention, bool include_system_rows);

}  // namespace avprune
