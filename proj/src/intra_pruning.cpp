// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/intra_pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "avprune/error.hpp"
#include "avprune/numerics.hpp"

namespace avprune {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

struct ChunkLayout {
    std::vector<std::size_t> video_positions;
    std::vector<std::size_t> audio_positions;
};

std::vector<ChunkLayout> chunk_layout(const InterleavedSequence& seq) {
    std::vector<ChunkLayout> layout(seq.num_chunks);
    for (std::size_t pos = 0; pos < seq.tokens.size(); ++pos) {
        const TokenMeta& t = seq.tokens[pos];
        if (!is_audiovisual(t.modality)) {
            continue;
        }
        require(t.chunk_index.has_value() && *t.chunk_index < layout.size(), ErrorKind::kInvalidInput,
                "apply_intra: audiovisual token without a valid chunk index");
        auto& chunk = layout[*t.chunk_index];
        (t.modality == Modality::kVideo ? chunk.video_positions : chunk.audio_positions).push_back(pos);
    }
    return layout;
}

}  // namespace

std::size_t round_count(double x) {
    return static_cast<std::size_t>(std::round(x));
}

std::vector<std::size_t> audio_intra_prune(std::span<const double> scores, double keep_ratio) {
    require(!scores.empty(), ErrorKind::kInvalidInput, "audio_intra_prune: empty scores");
    require(keep_ratio > 0.0 && keep_ratio <= 1.0, ErrorKind::kInvalidInput,
            "audio_intra_prune: keep_ratio must be in (0, 1]");
    const std::size_t keep = std::min(scores.size(), round_count(keep_ratio * static_cast<double>(scores.size())));
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(keep);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<FrameToken> video_ttm(const FrameGrid& grid, double prune_rate) {
    require(!grid.frames.empty(), ErrorKind::kInvalidInput, "video_ttm: no frames");
    require(prune_rate >= 0.0 && prune_rate < 1.0, ErrorKind::kInvalidInput, "video_ttm: prune_rate must be in [0, 1)");
    require(grid.window_size >= 1, ErrorKind::kInvalidInput, "video_ttm: window_size must be >= 1");
    const std::size_t t_count = grid.frames.front().rows();
    const std::size_t dim = grid.frames.front().cols();
    for (const auto& f : grid.frames) {
        require(f.rows() == t_count && f.cols() == dim, ErrorKind::kInvalidInput,
                "video_ttm: frames must share token count and width");
    }

    struct Candidate {
        FrameToken at;
        double similarity;
    };

    std::vector<FrameToken> retained;
    const std::size_t frame_count = grid.frames.size();
    for (std::size_t start = 0; start < frame_count; start += grid.window_size) {
        const std::size_t end = std::min(frame_count, start + grid.window_size);
        const MatrixF& anchor = grid.frames[start];
        for (std::size_t t = 0; t < t_count; ++t) {
            retained.push_back({start, t});
        }
        std::vector<Candidate> rest;
        for (std::size_t f = start + 1; f < end; ++f) {
            for (std::size_t t = 0; t < t_count; ++t) {
                double sim = 0.0;
                try {
                    sim = cosine(grid.frames[f].row(t), anchor.row(t));
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::kDegenerateInput) {
                        throw;
                    }
                }
                rest.push_back({{f, t}, sim});
            }
        }
        const std::size_t n_prune = std::min(rest.size(), round_count(prune_rate * static_cast<double>(rest.size())));
        // Most similar first; equal similarity prunes the higher (frame, token).
        std::sort(rest.begin(), rest.end(), [](const Candidate& a, const Candidate& b) {
            if (a.similarity != b.similarity) {
                return a.similarity > b.similarity;
            }
            return a.at > b.at;
        });
        for (std::size_t i = n_prune; i < rest.size(); ++i) {
            retained.push_back(rest[i].at);
        }
    }
    std::sort(retained.begin(), retained.end());
    return retained;
}

double IntraReport::audio_retention() const {
    return ratio(audio_after, audio_before);
}
double IntraReport::video_retention() const {
    return ratio(video_after, video_before);
}
double IntraReport::combined_retention() const {
    return ratio(audio_after + video_after, audio_before + video_before);
}

IntraResult apply_intra(const InterleavedSequence& seq, double audio_keep, double video_prune_rate,
                        const std::vector<std::vector<double>>& audio_scores, const std::vector<FrameGrid>& grids) {
    const auto layout = chunk_layout(seq);
    require(audio_scores.size() == layout.size(), ErrorKind::kInvalidInput,
            "apply_intra: need one audio score vector per chunk");
    require(grids.size() == layout.size(), ErrorKind::kInvalidInput, "apply_intra: need one frame grid per chunk");

    std::vector<bool> keep(seq.tokens.size(), true);
    IntraReport report;
    for (std::size_t c = 0; c < layout.size(); ++c) {
        const auto& chunk = layout[c];
        const std::string where = "chunk " + std::to_string(c);
        report.audio_before += chunk.audio_positions.size();
        report.video_before += chunk.video_positions.size();

        require(audio_scores[c].size() == chunk.audio_positions.size(), ErrorKind::kInvalidInput,
                "apply_intra: " + where + " audio score count does not match its audio tokens");
        if (!chunk.audio_positions.empty()) {
            for (std::size_t pos : chunk.audio_positions) {
                keep[pos] = false;
            }
            for (std::size_t idx : audio_intra_prune(audio_scores[c], audio_keep)) {
                keep[chunk.audio_positions[idx]] = true;
            }
        }

        const FrameGrid& grid = grids[c];
        const std::size_t per_frame = grid.frames.empty() ? 0 : grid.frames.front().rows();
        require(grid.frames.size() * per_frame == chunk.video_positions.size(), ErrorKind::kInvalidInput,
                "apply_intra: " + where + " frame grid does not match its video tokens");
        if (!chunk.video_positions.empty()) {
            for (std::size_t pos : chunk.video_positions) {
                keep[pos] = false;
            }
            for (const FrameToken& ft : video_ttm(grid, video_prune_rate)) {
                keep[chunk.video_positions[ft.frame * per_frame + ft.token]] = true;
            }
        }
    }

    std::vector<std::size_t> survivors;
    for (std::size_t pos = 0; pos < keep.size(); ++pos) {
        if (keep[pos]) {
            survivors.push_back(pos);
            const Modality m = seq.tokens[pos].modality;
            if (m == Modality::kAudio) {
                ++report.audio_after;
            } else if (m == Modality::kVideo) {
                ++report.video_after;
            }
        }
    }
    return {seq.subset(survivors), report};
}

std::vector<std::vector<double>> synth_audio_saliency(const InterleavedSequence& seq, std::uint64_t seed) {
    const auto layout = chunk_layout(seq);
    std::vector<std::vector<double>> scores(layout.size());
    for (std::size_t c = 0; c < layout.size(); ++c) {
        Rng rng(derive_seed(seed, c));
        scores[c].resize(layout[c].audio_positions.size());
        for (double& s : scores[c]) {
            s = rng.uniform();
        }
    }
    return scores;
}

std::vector<FrameGrid> grids_from_embeddings(const InterleavedSequence& seq, std::size_t frames_per_chunk,
                                             std::size_t tokens_per_frame) {
    const auto layout = chunk_layout(seq);
    std::vector<FrameGrid> grids(layout.size());
    const std::size_t d = seq.embeddings.cols();
    for (std::size_t c = 0; c < layout.size(); ++c) {
        const auto& video = layout[c].video_positions;
        if (video.empty()) {
            continue;
        }
        require(frames_per_chunk * tokens_per_frame == video.size(), ErrorKind::kInvalidInput,
                "intra: chunk " + std::to_string(c) + " has " + std::to_string(video.size()) +
                    " video tokens, expected frames_per_chunk * tokens_per_frame");
        for (std::size_t f = 0; f < frames_per_chunk; ++f) {
            MatrixF frame(tokens_per_frame, d);
            for (std::size_t t = 0; t < tokens_per_frame; ++t) {
                auto src = seq.embeddings.row(video[f * tokens_per_frame + t]);
                std::copy(src.begin(), src.end(), frame.row(t).begin());
            }
            grids[c].frames.push_back(std::move(frame));
        }
    }
    return grids;
}

IntraResult apply_intra(const InterleavedSequence& seq, const IntraConfig& cfg) {
    return apply_intra(seq, cfg.audio_keep, cfg.video_prune_rate, synth_audio_saliency(seq, cfg.saliency_seed),
                       grids_from_embeddings(seq, cfg.frames_per_chunk, cfg.tokens_per_frame));
}

}  // namespace avprune
