// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "avprune/error.hpp"

namespace avprune {

namespace {

double top_share(std::vector<double> values) {
    const double total = std::accumulate(values.begin(), values.end(), 0.0);
    if (!(total > 0.0)) {
        throw Error(ErrorKind::kDegenerateInput, "top20_recall: attention mass is zero");
    }
    // ceil(0.2 * E) in integer arithmetic.
    const std::size_t keep = std::max<std::size_t>(1, (values.size() + 4) / 5);
    std::partial_sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(keep), values.end(),
                      std::greater<>());
    double mass = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        mass += values[i];
    }
    return mass / total;
}

bool matches(Modality m, Modality want) {
    return m == want;
}

double safe_ratio(double num, double den) {
    return den == 0.0 ? 1.0 : num / den;
}

}  // namespace

double top20_recall(const MatrixD& values, RecallMode mode) {
    require(!values.empty(), ErrorKind::kInvalidInput, "top20_recall: empty map");
    for (double v : values.data()) {
        require(std::isfinite(v) && v >= 0.0, ErrorKind::kInvalidInput,
                "top20_recall: entries must be finite and non-negative");
    }
    if (mode == RecallMode::kFlattened) {
        return top_share(values.data());
    }
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t r = 0; r < values.rows(); ++r) {
        auto row = values.row(r);
        std::vector<double> v(row.begin(), row.end());
        if (std::accumulate(v.begin(), v.end(), 0.0) > 0.0) {
            acc += top_share(std::move(v));
            ++used;
        }
    }
    if (used == 0) {
        throw Error(ErrorKind::kDegenerateInput, "top20_recall: attention mass is zero");
    }
    return acc / static_cast<double>(used);
}

RetentionSeries retention_per_modality(const PruneTrace& trace) {
    RetentionSeries out;
    for (std::size_t l = 0; l < trace.layers.size(); ++l) {
        out.audio.push_back(trace.audio_retention(l));
        out.video.push_back(trace.video_retention(l));
    }
    return out;
}

PairKind pair_kind_from_string(std::string_view s) {
    if (s == "AA" || s == "aa") {
        return PairKind::kAudioAudio;
    }
    if (s == "VV" || s == "vv") {
        return PairKind::kVideoVideo;
    }
    if (s == "AV" || s == "av") {
        return PairKind::kAudioVideo;
    }
    throw Error(ErrorKind::kInvalidInput, "unknown pair kind '" + std::string(s) + "'");
}

std::size_t CosineHistogram::bin_of(double cosine) {
    const double scaled = std::floor((std::clamp(cosine, -1.0, 1.0) + 1.0) * 20.0);
    return std::min(kBins - 1, static_cast<std::size_t>(std::max(0.0, scaled)));
}

std::size_t CosineHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

double CosineHistogram::mean() const {
    if (samples.empty()) {
        return 0.0;
    }
    return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

double CosineHistogram::quantile(double q) const {
    require(!samples.empty(), ErrorKind::kInvalidInput, "quantile: no samples");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

CosineHistogram cosine_distribution(const MatrixF& embeddings, const std::vector<Modality>& modalities, PairKind kind,
                                    std::size_t sample_cap, Rng& rng) {
    require(embeddings.rows() == modalities.size(), ErrorKind::kInvalidInput,
            "cosine_distribution: one modality tag per embedding row");
    const Modality first = kind == PairKind::kVideoVideo ? Modality::kVideo : Modality::kAudio;
    const Modality second = kind == PairKind::kAudioAudio ? Modality::kAudio : Modality::kVideo;
    std::vector<std::size_t> a;
    std::vector<std::size_t> b;
    for (std::size_t i = 0; i < modalities.size(); ++i) {
        if (matches(modalities[i], first)) {
            a.push_back(i);
        }
        if (matches(modalities[i], second)) {
            b.push_back(i);
        }
    }
    require(a.size() >= 2 && b.size() >= 2, ErrorKind::kInvalidInput,
            "cosine_distribution: need at least 2 tokens of each modality");
    const bool same = first == second;
    const std::size_t pair_count = same ? a.size() * (a.size() - 1) / 2 : a.size() * b.size();

    CosineHistogram hist;
    auto add = [&](std::size_t i, std::size_t j) {
        double c = 0.0;
        try {
            c = cosine(embeddings.row(i), embeddings.row(j));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::kDegenerateInput) {
                throw;
            }
        }
        ++hist.counts[CosineHistogram::bin_of(c)];
        hist.samples.push_back(c);
    };

    if (sample_cap == 0 || pair_count <= sample_cap) {
        for (std::size_t x = 0; x < a.size(); ++x) {
            for (std::size_t y = same ? x + 1 : 0; y < b.size(); ++y) {
                add(a[x], b[y]);
            }
        }
        return hist;
    }
    for (std::size_t s = 0; s < sample_cap; ++s) {
        const std::size_t x = rng.uniform_index(a.size());
        std::size_t y = rng.uniform_index(same ? b.size() - 1 : b.size());
        if (same && y >= x) {
            ++y;
        }
        add(a[x], b[y]);
    }
    return hist;
}

double layer_flops(double n, double d) {
    return 24.0 * n * d * d + 4.0 * n * n * d;
}

double CostReport::flops_ratio() const {
    return safe_ratio(total_flops, baseline_flops);
}
double CostReport::attention_ratio() const {
    return safe_ratio(attention_flops, baseline_attention_flops);
}
double CostReport::projection_ratio() const {
    return safe_ratio(projection_flops, baseline_projection_flops);
}
double CostReport::memory_ratio() const {
    return safe_ratio(kv_bytes, baseline_kv_bytes);
}

CostReport cost_model(const PruneTrace& trace, std::size_t d, std::size_t bytes_per_element) {
    require(d > 0, ErrorKind::kInvalidInput, "cost_model: d must be positive");
    CostReport report;
    report.d = d;
    report.bytes_per_element = bytes_per_element;
    const double dd = static_cast<double>(d);
    const double bpe = static_cast<double>(bytes_per_element);
    const std::size_t n0 = trace.original_tokens != 0
                               ? trace.original_tokens
                               : (trace.layers.empty() ? 0 : trace.layers.front().total());
    auto make = [&](std::size_t layer, std::size_t n) {
        const double nn = static_cast<double>(n);
        return LayerCost{layer, n, 24.0 * nn * dd * dd, 4.0 * nn * nn * dd, 2.0 * nn * dd * bpe};
    };
    for (const auto& rec : trace.layers) {
        const LayerCost pruned = make(rec.layer, rec.total());
        const LayerCost base = make(rec.layer, n0);
        report.projection_flops += pruned.projection_flops;
        report.attention_flops += pruned.attention_flops;
        report.kv_bytes += pruned.kv_bytes;
        report.baseline_projection_flops += base.projection_flops;
        report.baseline_attention_flops += base.attention_flops;
        report.baseline_kv_bytes += base.kv_bytes;
        report.layers.push_back(pruned);
        report.baseline.push_back(base);
    }
    report.total_flops = report.projection_flops + report.attention_flops;
    report.baseline_flops = report.baseline_projection_flops + report.baseline_attention_flops;
    return report;
}

}  // namespace avprune
