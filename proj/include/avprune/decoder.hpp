// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "avprune/matrix.hpp"

namespace avprune {

/// Small seeded causal decoder used to produce realistic-looking attention.
///
/// Each layer is pre-RMSNorm multi-head self-attention followed by a ReLU
/// feed-forward block with 4x expansion, both residual. All weights are
/// Gaussian scaled by 1/sqrt(d). Arithmetic is float32 with sequential
/// summation so results are reproducible bit for bit.
class ToyDecoder {
public:
    ToyDecoder(std::size_t layers, std::size_t heads, std::size_t d, std::uint64_t seed);

    std::size_t layers() const noexcept {
        return m_layers.size();
    }
    std::size_t heads() const noexcept {
        return m_heads;
    }
    std::size_t dim() const noexcept {
        return m_dim;
    }

    /// embeddings + sinusoidal encoding of each token's original position.
    MatrixF embed(const MatrixF& embeddings, std::span<const std::size_t> positions) const;

    /// Runs one layer in place over `hidden` (rows ordered by position) and
    /// returns the head-averaged attention probabilities (n x n, causal).
    MatrixF forward_layer(std::size_t layer, MatrixF& hidden) const;

private:
    struct LayerWeights {
        MatrixF wq, wk, wv, wo;  // d x d
        MatrixF w1;              // d x 4d
        MatrixF w2;              // 4d x d
    };

    std::size_t m_heads;
    std::size_t m_dim;
    std::vector<LayerWeights> m_layers;
};

}  // namespace avprune
