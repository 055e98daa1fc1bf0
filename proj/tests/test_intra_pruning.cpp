// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>
#include <vector>

#include "avprune/error.hpp"
#include "avprune/intra_pruning.hpp"
#include "avprune/numerics.hpp"
#include "doctest.h"

using namespace avprune;

namespace {

FrameGrid random_grid(std::size_t frames, std::size_t tokens, std::size_t d, Rng& rng) {
    FrameGrid g;
    for (std::size_t f = 0; f < frames; ++f) {
        MatrixF m(tokens, d);
        for (float& x : m.data()) {
            x = static_cast<float>(gaussian(rng));
        }
        g.frames.push_back(std::move(m));
    }
    return g;
}

}  // namespace

TEST_CASE("audio_intra_prune") {
    const std::vector<double> scores{0.5, 0.1, 0.9, 0.3, 0.2, 0.7, 0.4, 0.6, 0.05, 0.8};
    CHECK(audio_intra_prune(scores, 0.7) == std::vector<std::size_t>{0, 2, 3, 5, 6, 7, 9});
    CHECK(audio_intra_prune(scores, 1.0).size() == 10);
    CHECK(audio_intra_prune(std::vector<double>{1, 1, 1, 1}, 0.5) == std::vector<std::size_t>{0, 1});
    CHECK_THROWS_AS(audio_intra_prune(std::vector<double>{}, 0.5), Error);
    CHECK_THROWS_AS(audio_intra_prune(scores, 0.0), Error);
}

TEST_CASE("round_count is half away from zero") {
    CHECK(round_count(2.5) == 3);
    CHECK(round_count(3.5) == 4);
    CHECK(round_count(2.4999) == 2);
}

TEST_CASE("video_ttm one window keeps 40 percent at rate 0.8") {
    Rng rng(3);
    const FrameGrid g = random_grid(4, 10, 8, rng);
    const auto kept = video_ttm(g, 0.8);
    CHECK(kept.size() == 16);
    std::size_t first = 0;
    for (const auto& ft : kept) {
        first += ft.frame == 0;
    }
    CHECK(first == 10);
    CHECK(video_ttm(g, 0.0).size() == 40);
}

TEST_CASE("video_ttm prunes the most similar tokens") {
    // Frame 1 token t copies the anchor when t is even, and is orthogonal otherwise.
    FrameGrid g;
    MatrixF anchor(4, 8, 0.0f);
    MatrixF next(4, 8, 0.0f);
    for (std::size_t t = 0; t < 4; ++t) {
        anchor(t, t) = 1.0f;
        next(t, t % 2 == 0 ? t : t + 4) = 1.0f;
    }
    g.frames = {anchor, next};
    const auto kept = video_ttm(g, 0.5);  // prunes round(0.5 * 4) = 2
    const std::vector<FrameToken> expected{{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 3}};
    CHECK(kept == expected);
}

TEST_CASE("video_ttm exact copies break ties on the highest index") {
    FrameGrid g;
    MatrixF frame(5, 5, 0.0f);
    for (std::size_t t = 0; t < 5; ++t) {
        frame(t, t) = 1.0f;
    }
    g.frames = {frame, frame, frame, frame};
    const auto kept = video_ttm(g, 0.8);  // 12 of 15 pruned
    std::vector<FrameToken> expected;
    for (std::size_t t = 0; t < 5; ++t) expected.push_back({0, t});
    for (std::size_t t = 0; t < 3; ++t) expected.push_back({1, t});
    CHECK(kept == expected);
}

TEST_CASE("video_ttm partial trailing window and zero vectors") {
    Rng rng(5);
    FrameGrid g = random_grid(6, 3, 4, rng);  // windows of 4 and 2 frames
    const auto kept = video_ttm(g, 0.8);
    // Window 1: 3 + (9 - round(7.2)=7) = 5; window 2: 3 + (3 - round(2.4)=2) = 4.
    CHECK(kept.size() == 9);
    CHECK(std::count_if(kept.begin(), kept.end(), [](const FrameToken& f) { return f.frame == 4; }) == 3);

    // A zero token counts as similarity 0, so it is pruned last.
    FrameGrid z;
    MatrixF a(2, 2, 1.0f);
    MatrixF b(2, 2, 1.0f);
    b(1, 0) = 0.0f;
    b(1, 1) = 0.0f;
    z.frames = {a, b};
    const auto kz = video_ttm(z, 0.5);
    CHECK(kz == std::vector<FrameToken>{{0, 0}, {0, 1}, {1, 1}});

    CHECK_THROWS_AS(video_ttm(FrameGrid{}, 0.5), Error);
    CHECK_THROWS_AS(video_ttm(g, 1.0), Error);
}

TEST_CASE("apply_intra default shape retention") {
    const auto seq = build_sequence(3, uniform_chunks(2, 288, 50), 4, 16, 11);
    IntraConfig cfg;  // audio_keep 0.7, video_prune_rate 0.8, 4 x 72 frames
    const auto result = apply_intra(seq, cfg);
    CHECK(result.report.audio_after == 70);
    CHECK(result.report.video_after == 2 * (72 + 43));
    CHECK(result.report.combined_retention() == doctest::Approx(0.444).epsilon(0.002 / 0.444));
    CHECK(std::abs(result.report.combined_retention() - (0.7 * 50 + 0.4 * 288) / 338.0) < 0.002);
    CHECK(result.report.audio_retention() == doctest::Approx(0.7));
}

TEST_CASE("apply_intra single small chunk") {
    const auto seq = build_sequence(1, {ChunkSpec{0, 40, 10}}, 2, 8, 4);
    std::vector<std::vector<double>> scores{{0.5, 0.1, 0.9, 0.3, 0.2, 0.7, 0.4, 0.6, 0.05, 0.8}};
    const auto grids = grids_from_embeddings(seq, 4, 10);
    const auto result = apply_intra(seq, 0.7, 0.8, scores, grids);
    CHECK(result.report.audio_after + result.report.video_after == 23);
    CHECK(result.report.audio_after == 7);
    CHECK(result.sequence.count(Modality::kSystemText) == 1);
    CHECK(result.sequence.count(Modality::kQueryText) == 2);

    // Audio survivors are exactly the expected indices, in order.
    std::vector<TokenId> audio;
    for (const auto& t : result.sequence.tokens) {
        if (t.modality == Modality::kAudio) {
            audio.push_back(t.id);
        }
    }
    const TokenId base = 1 + 40;
    CHECK(audio == std::vector<TokenId>{base + 0, base + 2, base + 3, base + 5, base + 6, base + 7, base + 9});
}

TEST_CASE("apply_intra identity, stability and text preservation") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t frames = 1 + rng.uniform_index(6);
        const std::size_t per_frame = 1 + rng.uniform_index(4);
        const std::size_t n_a = rng.uniform_index(6);
        const auto seq = build_sequence(rng.uniform_index(3), uniform_chunks(1 + rng.uniform_index(3), frames * per_frame, n_a),
                                        1 + rng.uniform_index(3), 8, rng.next_u64());
        IntraConfig id_cfg{1.0, 0.0, frames, per_frame, 1};
        const auto same = apply_intra(seq, id_cfg);
        CHECK(same.sequence.tokens == seq.tokens);
        CHECK(same.sequence.embeddings == seq.embeddings);

        IntraConfig cfg{0.3 + 0.7 * rng.uniform(), 0.9 * rng.uniform(), frames, per_frame, rng.next_u64()};
        const auto pruned = apply_intra(seq, cfg);
        CHECK(pruned.sequence.count(Modality::kSystemText) == seq.count(Modality::kSystemText));
        CHECK(pruned.sequence.count(Modality::kQueryText) == seq.count(Modality::kQueryText));
        for (std::size_t i = 1; i < pruned.sequence.size(); ++i) {
            CHECK(pruned.sequence.tokens[i - 1].id < pruned.sequence.tokens[i].id);
        }
        for (std::size_t i = 0; i < pruned.sequence.size(); ++i) {
            const TokenMeta& t = pruned.sequence.tokens[i];
            CHECK(t == seq.tokens[t.id]);
            CHECK(std::equal(pruned.sequence.embeddings.row(i).begin(), pruned.sequence.embeddings.row(i).end(),
                             seq.embeddings.row(t.id).begin()));
        }
        CHECK(pruned.report.audio_after == pruned.sequence.count(Modality::kAudio));
        CHECK(pruned.report.video_after == pruned.sequence.count(Modality::kVideo));
    }
}

TEST_CASE("apply_intra shape errors") {
    const auto seq = build_sequence(0, uniform_chunks(2, 8, 3), 1, 8, 0);
    const auto grids = grids_from_embeddings(seq, 2, 4);
    auto scores = synth_audio_saliency(seq, 0);
    CHECK_NOTHROW(apply_intra(seq, 0.7, 0.5, scores, grids));
    scores[1].pop_back();
    CHECK_THROWS_AS(apply_intra(seq, 0.7, 0.5, scores, grids), Error);
    CHECK_THROWS_AS(grids_from_embeddings(seq, 3, 3), Error);
    CHECK_THROWS_AS(apply_intra(seq, 0.7, 0.5, synth_audio_saliency(seq, 0), {grids[0]}), Error);
}
