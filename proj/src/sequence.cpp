// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "avprune/error.hpp"
#include "avprune/numerics.hpp"

namespace avprune {

namespace {

std::size_t block_of(Modality m) {
    switch (m) {
    case Modality::kAudio:
        return 0;
    case Modality::kVideo:
        return 1;
    default:
        return 2;
    }
}

// Random orthogonal d x d matrix by Gram-Schmidt on Gaussian columns.
MatrixD random_rotation(std::size_t d, Rng& rng) {
    MatrixD q(d, d);
    for (std::size_t c = 0; c < d; ++c) {
        std::vector<double> v(d);
        for (auto& x : v) {
            x = gaussian(rng);
        }
        for (std::size_t p = 0; p < c; ++p) {
            double dot = 0.0;
            for (std::size_t r = 0; r < d; ++r) {
                dot += v[r] * q(r, p);
            }
            for (std::size_t r = 0; r < d; ++r) {
                v[r] -= dot * q(r, p);
            }
        }
        double n = 0.0;
        for (double x : v) {
            n += x * x;
        }
        n = std::sqrt(n);
        for (std::size_t r = 0; r < d; ++r) {
            q(r, c) = v[r] / n;
        }
    }
    return q;
}

}  // namespace

std::string_view to_string(Modality m) {
    switch (m) {
    case Modality::kSystemText:
        return "system";
    case Modality::kVideo:
        return "video";
    case Modality::kAudio:
        return "audio";
    case Modality::kQueryText:
        return "query";
    }
    return "unknown";
}

Modality modality_from_string(std::string_view s) {
    if (s == "system") {
        return Modality::kSystemText;
    }
    if (s == "video") {
        return Modality::kVideo;
    }
    if (s == "audio") {
        return Modality::kAudio;
    }
    if (s == "query") {
        return Modality::kQueryText;
    }
    throw Error(ErrorKind::kSchemaError, "unknown modality '" + std::string(s) + "'");
}

std::size_t InterleavedSequence::count(Modality m) const {
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [m](const TokenMeta& t) { return t.modality == m; }));
}

InterleavedSequence InterleavedSequence::subset(const std::vector<std::size_t>& keep) const {
    InterleavedSequence out;
    out.num_chunks = num_chunks;
    out.tokens.reserve(keep.size());
    for (std::size_t pos : keep) {
        out.tokens.push_back(tokens.at(pos));
    }
    out.embeddings = embeddings.select_rows(keep);
    return out;
}

std::size_t default_subspace_dim(std::size_t d) {
    return std::max<std::size_t>(1, std::min<std::size_t>(8, d / 4));
}

MatrixF synth_embeddings(const std::vector<TokenMeta>& tokens, std::size_t d, const EmbeddingOptions& options,
                         std::uint64_t seed) {
    const std::size_t s = options.subspace_dim;
    require(d >= 2, ErrorKind::kInvalidInput, "synth_embeddings: d must be >= 2");
    require(s >= 1 && s <= d / 2, ErrorKind::kInvalidInput, "synth_embeddings: subspace_dim must be in [1, d/2]");
    require(options.noise_scale >= 0.0 && std::isfinite(options.noise_scale), ErrorKind::kInvalidInput,
            "synth_embeddings: noise_scale must be finite and non-negative");

    Rng rng(seed);
    const double center = 1.0 / std::sqrt(static_cast<double>(s));
    MatrixF out(tokens.size(), d);
    std::vector<double> v(d);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::fill(v.begin(), v.end(), 0.0);
        const std::size_t base = block_of(tokens[i].modality) * s;
        for (std::size_t j = 0; j < s; ++j) {
            v[(base + j) % d] += center + center * gaussian(rng);
        }
        if (options.noise_scale > 0.0) {
            for (double& x : v) {
                x += options.noise_scale * gaussian(rng);
            }
        }
        double n = 0.0;
        for (double x : v) {
            n += x * x;
        }
        n = std::sqrt(n);
        if (n == 0.0) {
            v[base % d] = 1.0;
            n = 1.0;
        }
        for (std::size_t c = 0; c < d; ++c) {
            out(i, c) = static_cast<float>(v[c] / n);
        }
    }

    if (options.rotate) {
        Rng rot_rng(derive_seed(seed, 1));
        const MatrixD q = random_rotation(d, rot_rng);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            std::vector<double> src(out.row(i).begin(), out.row(i).end());
            for (std::size_t r = 0; r < d; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    acc += q(r, c) * src[c];
                }
                out(i, r) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

std::vector<ChunkSpec> uniform_chunks(std::size_t m, std::size_t n_v, std::size_t n_a) {
    std::vector<ChunkSpec> chunks(m);
    for (std::size_t i = 0; i < m; ++i) {
        chunks[i] = ChunkSpec{i, n_v, n_a};
    }
    return chunks;
}

InterleavedSequence build_sequence(std::size_t sys_len, const std::vector<ChunkSpec>& chunks, std::size_t query_len,
                                   std::size_t d, std::uint64_t seed) {
    EmbeddingOptions options;
    options.subspace_dim = default_subspace_dim(d);
    return build_sequence(sys_len, chunks, query_len, d, seed, options);
}

InterleavedSequence build_sequence(std::size_t sys_len, const std::vector<ChunkSpec>& chunks, std::size_t query_len,
                                   std::size_t d, std::uint64_t seed, const EmbeddingOptions& options) {
    require(!chunks.empty(), ErrorKind::kInvalidInput, "build_sequence: at least one chunk is required");
    require(d >= 2, ErrorKind::kInvalidInput, "build_sequence: d must be >= 2");
    require(query_len >= 1, ErrorKind::kInvalidInput, "build_sequence: query_len must be >= 1");
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        require(chunks[i].n_v + chunks[i].n_a >= 1, ErrorKind::kInvalidInput,
                "build_sequence: chunk " + std::to_string(i) + " is empty");
    }

    InterleavedSequence seq;
    seq.num_chunks = chunks.size();
    auto push = [&seq](Modality m, std::optional<std::size_t> chunk) {
        const std::size_t id = seq.tokens.size();
        seq.tokens.push_back(TokenMeta{id, m, chunk, id});
    };
    for (std::size_t i = 0; i < sys_len; ++i) {
        push(Modality::kSystemText, std::nullopt);
    }
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        for (std::size_t i = 0; i < chunks[c].n_v; ++i) {
            push(Modality::kVideo, c);
        }
        for (std::size_t i = 0; i < chunks[c].n_a; ++i) {
            push(Modality::kAudio, c);
        }
    }
    for (std::size_t i = 0; i < query_len; ++i) {
        push(Modality::kQueryText, std::nullopt);
    }
    seq.embeddings = synth_embeddings(seq.tokens, d, options, seed);
    return seq;
}

std::optional<std::size_t> chunk_index_of(const InterleavedSequence& seq, TokenId id) {
    // Ids are dense at construction; after pruning fall back to search.
    if (id < seq.tokens.size() && seq.tokens[id].id == id) {
        return seq.tokens[id].chunk_index;
    }
    auto it = std::lower_bound(seq.tokens.begin(), seq.tokens.end(), id,
                               [](const TokenMeta& t, TokenId v) { return t.id < v; });
    if (it == seq.tokens.end() || it->id != id) {
        throw Error(ErrorKind::kNotFound, "chunk_index_of: unknown token id " + std::to_string(id));
    }
    return it->chunk_index;
}

}  // namespace avprune
