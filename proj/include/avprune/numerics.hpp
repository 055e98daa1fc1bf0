// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "avprune/matrix.hpp"

namespace avprune {

/// splitmix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes a parent seed and a stream index into an independent child seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// xoshiro256** generator seeded by four splitmix64 outputs.
///
/// The recurrence is fixed so that every implementation reproduces the same
/// stream from the same 64-bit seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform double in [0, 1) built from the top 53 bits.
    double uniform();
    /// Unbiased integer in [0, bound) by rejection; bound must be positive.
    std::uint64_t uniform_index(std::uint64_t bound);

    const std::array<std::uint64_t, 4>& state() const noexcept {
        return m_state;
    }

private:
    std::array<std::uint64_t, 4> m_state{};
};

/// Standard normal draw via Box-Muller (cosine branch). Consumes two uniforms.
double gaussian(Rng& rng);

std::vector<double> softmax_row(std::span<const double> values);

/// dot(u, v) / (|u| |v|), clamped to [-1, 1]. Throws DegenerateInput on a zero vector.
double cosine(std::span<const double> u, std::span<const double> v);
double cosine(std::span<const float> u, std::span<const float> v);

struct Pca2Result {
    MatrixD projection;                      // n x 2
    std::array<double, 2> eigenvalues{};     // descending, non-negative
    std::array<std::vector<double>, 2> axes; // unit principal axes, canonical sign
    int iterations = 0;
};

struct PowerIterationOptions {
    double tolerance = 1e-8;
    int max_iterations = 1000;
};

/// Top-2 principal components by power iteration with deflation on the
/// population covariance (1/n) of the centered rows.
Pca2Result pca2(const MatrixD& rows, const PowerIterationOptions& options = {});

}  // namespace avprune
