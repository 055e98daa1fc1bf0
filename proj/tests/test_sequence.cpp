// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <vector>

#include "avprune/error.hpp"
#include "avprune/numerics.hpp"
#include "avprune/sequence.hpp"
#include "doctest.h"

using namespace avprune;

namespace {

double dot_rows(const MatrixF& m, std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        acc += static_cast<double>(m(i, c)) * m(j, c);
    }
    return acc;
}

std::vector<TokenMeta> tokens_of(std::size_t n_audio, std::size_t n_video, std::size_t n_text) {
    std::vector<TokenMeta> out;
    auto push = [&](Modality m, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t id = out.size();
            out.push_back({id, m, is_audiovisual(m) ? std::optional<std::size_t>(0) : std::nullopt, id});
        }
    };
    push(Modality::kAudio, n_audio);
    push(Modality::kVideo, n_video);
    push(Modality::kQueryText, n_text);
    return out;
}

}  // namespace

TEST_CASE("build_sequence minimal ordering") {
    const auto seq = build_sequence(0, {ChunkSpec{0, 2, 1}}, 1, 4, 7);
    REQUIRE(seq.size() == 4);
    CHECK(seq.tokens[0].modality == Modality::kVideo);
    CHECK(seq.tokens[1].modality == Modality::kVideo);
    CHECK(seq.tokens[2].modality == Modality::kAudio);
    CHECK(seq.tokens[3].modality == Modality::kQueryText);
    CHECK(seq.tokens[0].chunk_index == 0u);
    CHECK(seq.tokens[2].chunk_index == 0u);
    CHECK_FALSE(seq.tokens[3].chunk_index.has_value());
    CHECK(seq.embeddings.rows() == 4);
    CHECK(seq.embeddings.cols() == 4);
}

TEST_CASE("build_sequence with default chunk shape") {
    const auto seq = build_sequence(3, uniform_chunks(2, 288, 50), 5, 8, 1);
    CHECK(seq.size() == 684);
    CHECK(seq.count(Modality::kAudio) + seq.count(Modality::kVideo) == 676);
    CHECK(seq.count(Modality::kSystemText) == 3);
    CHECK(seq.count(Modality::kQueryText) == 5);
}

TEST_CASE("build_sequence is deterministic") {
    const auto a = build_sequence(2, uniform_chunks(3, 6, 4), 3, 16, 42);
    const auto b = build_sequence(2, uniform_chunks(3, 6, 4), 3, 16, 42);
    CHECK(a.embeddings == b.embeddings);
    CHECK(a.tokens == b.tokens);
    const auto c = build_sequence(2, uniform_chunks(3, 6, 4), 3, 16, 43);
    CHECK_FALSE(a.embeddings == c.embeddings);
}

TEST_CASE("build_sequence layout invariants over random shapes") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t sys = rng.uniform_index(4);
        const std::size_t query = 1 + rng.uniform_index(4);
        std::vector<ChunkSpec> chunks(1 + rng.uniform_index(5));
        std::size_t av = 0;
        for (std::size_t c = 0; c < chunks.size(); ++c) {
            chunks[c] = {c, rng.uniform_index(5), rng.uniform_index(5)};
            if (chunks[c].n_v + chunks[c].n_a == 0) {
                chunks[c].n_a = 1;
            }
            av += chunks[c].n_v + chunks[c].n_a;
        }
        const auto seq = build_sequence(sys, chunks, query, 8, rng.next_u64());
        REQUIRE(seq.size() == sys + av + query);
        CHECK(seq.embeddings.rows() == seq.size());

        // Reconstruct the expected pattern and compare.
        std::vector<std::pair<Modality, std::optional<std::size_t>>> expected;
        for (std::size_t i = 0; i < sys; ++i) expected.push_back({Modality::kSystemText, std::nullopt});
        for (const auto& ch : chunks) {
            for (std::size_t i = 0; i < ch.n_v; ++i) expected.push_back({Modality::kVideo, ch.index});
            for (std::size_t i = 0; i < ch.n_a; ++i) expected.push_back({Modality::kAudio, ch.index});
        }
        for (std::size_t i = 0; i < query; ++i) expected.push_back({Modality::kQueryText, std::nullopt});
        std::size_t last_chunk = 0;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            CHECK(seq.tokens[i].id == i);
            CHECK(seq.tokens[i].original_position == i);
            CHECK(seq.tokens[i].modality == expected[i].first);
            CHECK(seq.tokens[i].chunk_index == expected[i].second);
            if (seq.tokens[i].chunk_index) {
                CHECK(*seq.tokens[i].chunk_index >= last_chunk);
                last_chunk = *seq.tokens[i].chunk_index;
            }
            double norm = std::sqrt(dot_rows(seq.embeddings, i, i));
            CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
        }
    }
}

TEST_CASE("build_sequence errors") {
    CHECK_THROWS_AS(build_sequence(0, {}, 1, 4, 0), Error);
    CHECK_THROWS_AS(build_sequence(0, {ChunkSpec{0, 1, 1}}, 1, 1, 0), Error);
    CHECK_THROWS_AS(build_sequence(0, {ChunkSpec{0, 1, 1}}, 0, 4, 0), Error);
    try {
        build_sequence(0, {}, 1, 4, 0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kInvalidInput);
    }
}

TEST_CASE("synth_embeddings with zero noise gives orthogonal modalities") {
    const auto toks = tokens_of(10, 10, 5);
    const MatrixF e = synth_embeddings(toks, 32, {8, 0.0, false}, 5);
    for (std::size_t i = 0; i < toks.size(); ++i) {
        for (std::size_t j = 0; j < toks.size(); ++j) {
            if (toks[i].modality != toks[j].modality) {
                CHECK(dot_rows(e, i, j) == 0.0);
            }
        }
    }
}

TEST_CASE("synth_embeddings default separation on a 1000-token sample") {
    const auto toks = tokens_of(500, 500, 0);
    const MatrixF e = synth_embeddings(toks, 64, {8, 0.3, false}, 123);
    // Direct enumeration of all pairwise cosines (rows are unit norm).
    std::vector<double> cross;
    double intra_sum = 0.0;
    std::size_t intra_n = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        for (std::size_t j = i + 1; j < toks.size(); ++j) {
            const double c = dot_rows(e, i, j);
            if (toks[i].modality == toks[j].modality) {
                intra_sum += c;
                ++intra_n;
            } else {
                cross.push_back(c);
            }
        }
    }
    std::sort(cross.begin(), cross.end());
    const double p95 = cross[static_cast<std::size_t>(std::ceil(0.95 * cross.size())) - 1];
    double cross_mean = 0.0;
    for (double c : cross) cross_mean += c;
    cross_mean /= static_cast<double>(cross.size());
    CHECK(p95 < 0.3);
    CHECK(intra_sum / intra_n > cross_mean);
}

TEST_CASE("synth_embeddings single modality and rotation") {
    const auto toks = tokens_of(20, 0, 0);
    const MatrixF e = synth_embeddings(toks, 16, {4, 0.3, false}, 9);
    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = i + 1; j < 20; ++j) {
            mean += dot_rows(e, i, j);
            ++n;
        }
    }
    CHECK(mean / n > 0.0);

    // A rotation preserves all inner products.
    const auto mixed = tokens_of(5, 5, 5);
    const MatrixF plain = synth_embeddings(mixed, 16, {4, 0.2, false}, 9);
    const MatrixF rotated = synth_embeddings(mixed, 16, {4, 0.2, true}, 9);
    CHECK_FALSE(plain == rotated);
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        for (std::size_t j = 0; j < mixed.size(); ++j) {
            CHECK(dot_rows(plain, i, j) == doctest::Approx(dot_rows(rotated, i, j)).epsilon(1e-4));
        }
    }
}

TEST_CASE("synth_embeddings rejects oversized subspace") {
    CHECK_THROWS_AS(synth_embeddings(tokens_of(1, 1, 1), 8, {5, 0.3, false}, 0), Error);
}

TEST_CASE("chunk_index_of") {
    const auto seq = build_sequence(2, uniform_chunks(5, 3, 2), 2, 8, 0);
    CHECK(chunk_index_of(seq, 2) == 0u);  // first video token of chunk 0
    CHECK_FALSE(chunk_index_of(seq, seq.size() - 1).has_value());
    // Last audio token sits right before the query block.
    const TokenId last_audio = 2 + 5 * 5 - 1;
    CHECK(seq.tokens[last_audio].modality == Modality::kAudio);
    CHECK(chunk_index_of(seq, last_audio) == 4u);
    try {
        chunk_index_of(seq, 10000);
        FAIL("expected NotFound");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kNotFound);
    }
    // Still resolves ids after a subset removes earlier tokens.
    const auto sub = seq.subset({0, 5, 26});
    CHECK(chunk_index_of(sub, 5) == seq.tokens[5].chunk_index);
    CHECK_THROWS_AS(chunk_index_of(sub, 1), Error);
}
