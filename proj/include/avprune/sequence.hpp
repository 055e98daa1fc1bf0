// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "avprune/matrix.hpp"

namespace avprune {

enum class Modality : std::uint8_t { kSystemText, kVideo, kAudio, kQueryText };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s);

inline bool is_audiovisual(Modality m) {
    return m == Modality::kVideo || m == Modality::kAudio;
}
inline bool is_text(Modality m) {
    return !is_audiovisual(m);
}

using TokenId = std::size_t;

struct TokenMeta {
    TokenId id = 0;
    Modality modality = Modality::kSystemText;
    std::optional<std::size_t> chunk_index;  // audiovisual tokens only
    std::size_t original_position = 0;

    bool operator==(const TokenMeta&) const = default;
};

struct ChunkSpec {
    std::size_t index = 0;
    std::size_t n_v = 288;
    std::size_t n_a = 50;
};

/// Token stream laid out as [system text, (video, audio) per chunk, query text].
struct InterleavedSequence {
    std::vector<TokenMeta> tokens;
    MatrixF embeddings;          // one row per token
    std::size_t num_chunks = 0;  // chunk count of the unpruned layout

    std::size_t size() const noexcept {
        return tokens.size();
    }
    /// Largest chunk index of the full layout; 0 for a single chunk.
    std::size_t max_chunk() const noexcept {
        return num_chunks == 0 ? 0 : num_chunks - 1;
    }
    std::size_t count(Modality m) const;
    /// Keeps the tokens at the given positions (ascending) with their embedding rows.
    InterleavedSequence subset(const std::vector<std::size_t>& keep) const;
};

struct EmbeddingOptions {
    std::size_t subspace_dim = 8;
    double noise_scale = 0.3;
    /// Applies a seeded random orthogonal rotation after sampling.
    bool rotate = false;
};

/// Per-modality clustered Gaussian embeddings with unit-normalized rows.
///
/// Audio, video and text draw their signal from separate blocks of
/// `subspace_dim` coordinate axes (block k covers axes k*s .. k*s+s-1, taken
/// modulo d), centered on the block diagonal, then isotropic noise of
/// `noise_scale` per coordinate is added.
MatrixF synth_embeddings(const std::vector<TokenMeta>& tokens, std::size_t d, const EmbeddingOptions& options,
                         std::uint64_t seed);

/// Subspace dimension used by build_sequence for a model width d.
std::size_t default_subspace_dim(std::size_t d);

InterleavedSequence build_sequence(std::size_t sys_len, const std::vector<ChunkSpec>& chunks, std::size_t query_len,
                                   std::size_t d, std::uint64_t seed);
InterleavedSequence build_sequence(std::size_t sys_len, const std::vector<ChunkSpec>& chunks, std::size_t query_len,
                                   std::size_t d, std::uint64_t seed, const EmbeddingOptions& options);

/// Convenience for m identical chunks.
std::vector<ChunkSpec> uniform_chunks(std::size_t m, std::size_t n_v, std::size_t n_a);

std::optional<std::size_t> chunk_index_of(const InterleavedSequence& seq, TokenId id);

}  // namespace avprune
