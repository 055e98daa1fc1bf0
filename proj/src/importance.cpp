// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/importance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "avprune/error.hpp"

namespace avprune {

namespace {

Selection lowest_k(std::vector<ImportanceEntry> entries, std::size_t k, bool clamped) {
    std::sort(entries.begin(), entries.end(), prune_before);
    Selection out;
    out.clamped = clamped;
    for (std::size_t i = 0; i < k; ++i) {
        out.pruned.push_back(entries[i].id);
    }
    std::sort(out.pruned.begin(), out.pruned.end());
    return out;
}

}  // namespace

std::string_view to_string(Selector s) {
    switch (s) {
    case Selector::kPlain:
        return "plain";
    case Selector::kTds:
        return "tds";
    case Selector::kRandom:
        return "random";
    }
    return "unknown";
}

Selector selector_from_string(std::string_view s) {
    if (s == "plain") {
        return Selector::kPlain;
    }
    if (s == "tds") {
        return Selector::kTds;
    }
    if (s == "random") {
        return Selector::kRandom;
    }
    throw Error(ErrorKind::kInvalidInput, "unknown selector '" + std::string(s) + "'");
}

ImportanceScores query_importance(const AttentionMap& attn) {
    const std::size_t n_rows = attn.values.rows();
    require(n_rows > 0, ErrorKind::kInvalidInput, "query_importance: no text rows");
    require(attn.values.cols() == attn.col_ids.size() && attn.col_chunks.size() == attn.col_ids.size(),
            ErrorKind::kInvalidInput, "query_importance: column metadata does not match the map");
    ImportanceScores scores(attn.col_ids.size());
    for (std::size_t j = 0; j < scores.size(); ++j) {
        double acc = 0.0;
        for (std::size_t q = 0; q < n_rows; ++q) {
            acc += attn.values(q, j);
        }
        scores[j] = {attn.col_ids[j], attn.col_chunks[j], acc / static_cast<double>(n_rows)};
    }
    return scores;
}

std::size_t prune_count(std::size_t n_audio, std::size_t n_video, double p) {
    require(p >= 0.0 && p < 1.0, ErrorKind::kInvalidInput, "prune_count: p must be in [0, 1)");
    return static_cast<std::size_t>(std::floor(static_cast<double>(n_audio + n_video) * p));
}

bool prune_before(const ImportanceEntry& a, const ImportanceEntry& b) {
    if (a.score != b.score) {
        return a.score < b.score;
    }
    return a.id < b.id;
}

Selection plain_select(const ImportanceScores& scores, std::size_t k) {
    const bool clamped = k > scores.size();
    return lowest_k(scores, std::min(k, scores.size()), clamped);
}

Selection tds_select(const ImportanceScores& scores, std::size_t k, const TdsConfig& cfg, std::size_t max_chunk) {
    require(cfg.lambda_div >= 0.0, ErrorKind::kInvalidInput, "tds_select: lambda_div must be non-negative");
    const bool clamped = k > scores.size();
    k = std::min(k, scores.size());
    if (k == 0) {
        return {{}, clamped};
    }

    // Key chunk: chunk of the highest-scoring token, lower id on ties.
    const ImportanceEntry* peak = &scores.front();
    for (const auto& e : scores) {
        if (e.score > peak->score || (e.score == peak->score && e.id < peak->id)) {
            peak = &e;
        }
    }
    const std::size_t c_max = peak->chunk;

    std::vector<ImportanceEntry> candidates = scores;
    std::sort(candidates.begin(), candidates.end(), prune_before);
    candidates.resize(std::min(2 * k, candidates.size()));

    for (auto& e : candidates) {
        double distance = 0.0;
        if (max_chunk > 0) {
            const double gap = e.chunk > c_max ? static_cast<double>(e.chunk - c_max)
                                               : static_cast<double>(c_max - e.chunk);
            distance = gap / static_cast<double>(max_chunk);
        }
        e.score += cfg.lambda_div * distance;
    }
    return lowest_k(std::move(candidates), k, clamped);
}

Selection random_select(std::span<const TokenId> ids, std::size_t k, Rng& rng) {
    Selection out;
    out.clamped = k > ids.size();
    k = std::min(k, ids.size());
    std::vector<TokenId> pool(ids.begin(), ids.end());
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    out.pruned.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.pruned.begin(), out.pruned.end());
    return out;
}

}  // namespace avprune
