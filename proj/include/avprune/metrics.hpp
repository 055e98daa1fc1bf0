// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "avprune/matrix.hpp"
#include "avprune/numerics.hpp"
#include "avprune/sequence.hpp"
#include "avprune/trace.hpp"

namespace avprune {

enum class RecallMode { kFlattened, kPerRow };

/// Share of total attention mass held by the ceil(0.2 * E) largest entries.
/// Per-row mode applies the same rule to each row and averages the rows.
double top20_recall(const MatrixD& values, RecallMode mode = RecallMode::kFlattened);

struct RetentionSeries {
    std::vector<double> audio;
    std::vector<double> video;
};

RetentionSeries retention_per_modality(const PruneTrace& trace);

enum class PairKind { kAudioAudio, kVideoVideo, kAudioVideo };

PairKind pair_kind_from_string(std::string_view s);

/// Fixed 40-bin histogram over [-1, 1] (width 0.05, last bin closed).
struct CosineHistogram {
    static constexpr std::size_t kBins = 40;
    static constexpr double kWidth = 0.05;

    std::array<std::size_t, kBins> counts{};
    std::vector<double> samples;  // cosines that were binned, in draw order

    static std::size_t bin_of(double cosine);
    double bin_lower(std::size_t bin) const {
        return -1.0 + static_cast<double>(bin) * kWidth;
    }
    std::size_t total() const;
    double mean() const;
    /// Nearest-rank quantile over the binned samples.
    double quantile(double q) const;
};

/// Pairwise cosines between tokens of the requested modalities. All pairs are
/// used when they fit in `sample_cap`; otherwise `sample_cap` pairs are drawn
/// uniformly with replacement.
CosineHistogram cosine_distribution(const MatrixF& embeddings, const std::vector<Modality>& modalities, PairKind kind,
                                    std::size_t sample_cap, Rng& rng);

struct LayerCost {
    std::size_t layer = 0;
    std::size_t tokens = 0;
    double projection_flops = 0.0;  // 24 n d^2
    double attention_flops = 0.0;   // 4 n^2 d
    double kv_bytes = 0.0;          // 2 n d bytes_per_element
};

/// Analytic prefill cost. Causal attention is counted as a full n x n score
/// matrix. The baseline keeps the unpruned token count at every layer.
struct CostReport {
    std::size_t d = 0;
    std::size_t bytes_per_element = 0;
    std::vector<LayerCost> layers;
    std::vector<LayerCost> baseline;

    double total_flops = 0.0;
    double baseline_flops = 0.0;
    double attention_flops = 0.0;
    double baseline_attention_flops = 0.0;
    double projection_flops = 0.0;
    double baseline_projection_flops = 0.0;
    double kv_bytes = 0.0;
    double baseline_kv_bytes = 0.0;

    /// pruned / baseline; 1 when nothing was pruned.
    double flops_ratio() const;
    double attention_ratio() const;
    double projection_ratio() const;
    double memory_ratio() const;
};

double layer_flops(double n, double d);

CostReport cost_model(const PruneTrace& trace, std::size_t d, std::size_t bytes_per_element);

}  // namespace avprune
