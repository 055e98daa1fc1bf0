// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "avprune/error.hpp"
#include "avprune/numerics.hpp"

namespace avprune {

namespace {

MatrixF gaussian_matrix(std::size_t rows, std::size_t cols, float scale, Rng& rng) {
    MatrixF m(rows, cols);
    for (float& x : m.data()) {
        x = static_cast<float>(gaussian(rng)) * scale;
    }
    return m;
}

// out = x * w, sequential accumulation over the inner dimension.
MatrixF matmul(const MatrixF& x, const MatrixF& w) {
    MatrixF out(x.rows(), w.cols(), 0.0f);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto xr = x.row(r);
        auto orow = out.row(r);
        for (std::size_t k = 0; k < x.cols(); ++k) {
            const float a = xr[k];
            auto wr = w.row(k);
            for (std::size_t c = 0; c < w.cols(); ++c) {
                orow[c] += a * wr[c];
            }
        }
    }
    return out;
}

MatrixF rms_norm(const MatrixF& h) {
    MatrixF out(h.rows(), h.cols());
    for (std::size_t r = 0; r < h.rows(); ++r) {
        float ss = 0.0f;
        for (float v : h.row(r)) {
            ss += v * v;
        }
        const float inv = 1.0f / std::sqrt(ss / static_cast<float>(h.cols()) + 1e-6f);
        auto src = h.row(r);
        auto dst = out.row(r);
        for (std::size_t c = 0; c < h.cols(); ++c) {
            dst[c] = src[c] * inv;
        }
    }
    return out;
}

}  // namespace

ToyDecoder::ToyDecoder(std::size_t layers, std::size_t heads, std::size_t d, std::uint64_t seed)
    : m_heads(heads), m_dim(d) {
    require(layers >= 1, ErrorKind::kInvalidInput, "ToyDecoder: layers must be >= 1");
    require(heads >= 1 && d % heads == 0, ErrorKind::kInvalidInput, "ToyDecoder: d must be divisible by heads");
    Rng rng(seed);
    const float scale = 1.0f / std::sqrt(static_cast<float>(d));
    m_layers.reserve(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        LayerWeights w;
        w.wq = gaussian_matrix(d, d, scale, rng);
        w.wk = gaussian_matrix(d, d, scale, rng);
        w.wv = gaussian_matrix(d, d, scale, rng);
        w.wo = gaussian_matrix(d, d, scale, rng);
        w.w1 = gaussian_matrix(d, 4 * d, scale, rng);
        w.w2 = gaussian_matrix(4 * d, d, scale, rng);
        m_layers.push_back(std::move(w));
    }
}

MatrixF ToyDecoder::embed(const MatrixF& embeddings, std::span<const std::size_t> positions) const {
    require(embeddings.cols() == m_dim, ErrorKind::kInvalidInput, "ToyDecoder: embedding width does not match model");
    require(embeddings.rows() == positions.size(), ErrorKind::kInvalidInput, "ToyDecoder: one position per row");
    MatrixF h = embeddings;
    for (std::size_t r = 0; r < h.rows(); ++r) {
        const double pos = static_cast<double>(positions[r]);
        for (std::size_t c = 0; c < m_dim; ++c) {
            const double freq = std::pow(10000.0, -static_cast<double>(c - c % 2) / static_cast<double>(m_dim));
            const double angle = pos * freq;
            h(r, c) += static_cast<float>(c % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    }
    return h;
}

MatrixF ToyDecoder::forward_layer(std::size_t layer, MatrixF& hidden) const {
    require(layer < m_layers.size(), ErrorKind::kInvalidInput, "ToyDecoder: layer out of range");
    require(hidden.cols() == m_dim, ErrorKind::kInvalidInput, "ToyDecoder: hidden width does not match model");
    const LayerWeights& w = m_layers[layer];
    const std::size_t n = hidden.rows();
    const std::size_t dh = m_dim / m_heads;
    const double score_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    const MatrixF x = rms_norm(hidden);
    const MatrixF q = matmul(x, w.wq);
    const MatrixF k = matmul(x, w.wk);
    const MatrixF v = matmul(x, w.wv);

    MatrixD attn_sum(n, n, 0.0);
    MatrixF context(n, m_dim, 0.0f);
    std::vector<double> logits;
    for (std::size_t h = 0; h < m_heads; ++h) {
        const std::size_t off = h * dh;
        for (std::size_t i = 0; i < n; ++i) {
            logits.assign(i + 1, 0.0);
            for (std::size_t j = 0; j <= i; ++j) {
                float dot = 0.0f;
                for (std::size_t c = 0; c < dh; ++c) {
                    dot += q(i, off + c) * k(j, off + c);
                }
                logits[j] = static_cast<double>(dot) * score_scale;
            }
            const std::vector<double> probs = softmax_row(logits);
            for (std::size_t j = 0; j <= i; ++j) {
                const float p = static_cast<float>(probs[j]);
                attn_sum(i, j) += probs[j];
                for (std::size_t c = 0; c < dh; ++c) {
                    context(i, off + c) += p * v(j, off + c);
                }
            }
        }
    }

    const MatrixF attn_out = matmul(context, w.wo);
    for (std::size_t i = 0; i < hidden.data().size(); ++i) {
        hidden.data()[i] += attn_out.data()[i];
    }
    MatrixF ff = matmul(rms_norm(hidden), w.w1);
    for (float& f : ff.data()) {
        f = std::max(f, 0.0f);
    }
    const MatrixF ff_out = matmul(ff, w.w2);
    for (std::size_t i = 0; i < hidden.data().size(); ++i) {
        hidden.data()[i] += ff_out.data()[i];
    }

    MatrixF attn(n, n, 0.0f);
    const double inv_heads = 1.0 / static_cast<double>(m_heads);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            attn(i, j) = static_cast<float>(attn_sum(i, j) * inv_heads);
        }
    }
    return attn;
}

}  // namespace avprune
