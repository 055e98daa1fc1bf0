// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "avprune/matrix.hpp"
#include "avprune/numerics.hpp"
#include "avprune/sequence.hpp"

namespace avprune {

/// Head-averaged attention from text rows to surviving audiovisual columns.
/// Values are post-softmax probabilities taken from full rows, not renormalized
/// after column restriction.
struct AttentionMap {
    std::vector<TokenId> row_ids;
    std::vector<TokenId> col_ids;
    std::vector<std::size_t> col_chunks;  // chunk index per column
    MatrixD values;                       // rows x cols
};

struct ImportanceEntry {
    TokenId id = 0;
    std::size_t chunk = 0;
    double score = 0.0;
};

using ImportanceScores = std::vector<ImportanceEntry>;

struct TdsConfig {
    double lambda_div = 0.2;
    std::size_t start_layer = 14;
};

enum class Selector { kPlain, kTds, kRandom };

std::string_view to_string(Selector s);
Selector selector_from_string(std::string_view s);

/// Pruned ids in ascending order. `clamped` is set when the budget exceeded
/// the available tokens.
struct Selection {
    std::vector<TokenId> pruned;
    bool clamped = false;
};

/// Column mean over the text rows.
ImportanceScores query_importance(const AttentionMap& attn);

/// floor((n_audio + n_video) * p).
std::size_t prune_count(std::size_t n_audio, std::size_t n_video, double p);

/// Orders entries ascending by (score, id): lower scores are pruned first and
/// equal scores prune the lower id first.
bool prune_before(const ImportanceEntry& a, const ImportanceEntry& b);

Selection plain_select(const ImportanceScores& scores, std::size_t k);

/// Temporal-diversity selection: the k lowest of score + lambda * |c_max - c| / max_chunk
/// among the min(2k, n) lowest-score candidates. c_max is the chunk of the
/// highest-scoring token (ties: lower id). max_chunk = 0 disables the distance term.
Selection tds_select(const ImportanceScores& scores, std::size_t k, const TdsConfig& cfg, std::size_t max_chunk);

/// Uniform sample of k ids without replacement (partial Fisher-Yates).
Selection random_select(std::span<const TokenId> ids, std::size_t k, Rng& rng);

}  // namespace avprune
