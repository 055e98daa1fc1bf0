// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "avprune/error.hpp"

namespace avprune {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

template <typename T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
    require(u.size() == v.size(), ErrorKind::kInvalidInput, "cosine: length mismatch");
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i];
        const double b = v[i];
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0 || nv == 0.0) {
        throw Error(ErrorKind::kDegenerateInput, "cosine: zero-norm vector");
    }
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<double> mat_vec(const MatrixD& m, const std::vector<double>& v) {
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            acc += m(r, c) * v[c];
        }
        out[r] = acc;
    }
    return out;
}

double norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

void canonicalize_sign(std::vector<double>& axis) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (std::abs(axis[i]) > std::abs(axis[best])) {
            best = i;
        }
    }
    if (axis[best] < 0.0) {
        for (double& x : axis) {
            x = -x;
        }
    }
}

// Dominant eigenpair of a symmetric PSD matrix.
std::pair<std::vector<double>, double> power_iteration(const MatrixD& cov, const PowerIterationOptions& options,
                                                       int& iterations) {
    const std::size_t d = cov.rows();
    // Start from the covariance column with the largest norm; falls back to e_0.
    std::size_t start = 0;
    double best_norm = -1.0;
    for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            acc += cov(r, c) * cov(r, c);
        }
        if (acc > best_norm) {
            best_norm = acc;
            start = c;
        }
    }
    std::vector<double> v(d, 0.0);
    if (best_norm > 0.0) {
        for (std::size_t r = 0; r < d; ++r) {
            v[r] = cov(r, start);
        }
        // Nudge off exact eigen-degenerate starts so deflated directions are reachable.
        for (std::size_t r = 0; r < d; ++r) {
            v[r] += 1e-3 * best_norm / static_cast<double>(r + 1);
        }
    } else {
        v[0] = 1.0;
    }
    double nv = norm(v);
    for (double& x : v) {
        x /= nv;
    }

    double residual = 1.0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        std::vector<double> w = mat_vec(cov, v);
        const double nw = norm(w);
        iterations = it;
        if (nw == 0.0) {
            return {v, 0.0};
        }
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            w[i] /= nw;
            dot += w[i] * v[i];
        }
        residual = 1.0 - std::abs(dot);
        v = std::move(w);
        if (residual <= options.tolerance) {
            std::vector<double> cv = mat_vec(cov, v);
            double lambda = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                lambda += v[i] * cv[i];
            }
            return {v, std::max(lambda, 0.0)};
        }
    }
    throw ConvergenceError("pca2: power iteration did not converge", residual);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed ^ (stream * 0xD1B54A32D192ED03ULL);
    return splitmix64(state);
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : m_state) {
        word = splitmix64(sm);
    }
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(m_state[1] * 5, 7) * 9;
    const std::uint64_t t = m_state[1] << 17;
    m_state[2] ^= m_state[0];
    m_state[3] ^= m_state[1];
    m_state[1] ^= m_state[2];
    m_state[0] ^= m_state[3];
    m_state[2] ^= t;
    m_state[3] = rotl(m_state[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
    require(bound > 0, ErrorKind::kInvalidInput, "uniform_index: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

double gaussian(Rng& rng) {
    const double u1 = 1.0 - rng.uniform();  // (0, 1]
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> softmax_row(std::span<const double> values) {
    require(!values.empty(), ErrorKind::kInvalidInput, "softmax_row: empty input");
    double max_value = values[0];
    for (double x : values) {
        require(std::isfinite(x), ErrorKind::kInvalidInput, "softmax_row: non-finite input");
        max_value = std::max(max_value, x);
    }
    std::vector<double> out(values.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::exp(values[i] - max_value);
        sum += out[i];
    }
    for (double& x : out) {
        x /= sum;
    }
    return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    return cosine_impl(u, v);
}

double cosine(std::span<const float> u, std::span<const float> v) {
    return cosine_impl(u, v);
}

Pca2Result pca2(const MatrixD& rows, const PowerIterationOptions& options) {
    const std::size_t n = rows.rows();
    const std::size_t d = rows.cols();
    require(n >= 3, ErrorKind::kInvalidInput, "pca2: need at least 3 rows");
    require(d >= 2, ErrorKind::kInvalidInput, "pca2: need at least 2 columns");

    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            mean[c] += rows(r, c);
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(n);
    }
    MatrixD centered(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            centered(r, c) = rows(r, c) - mean[c];
        }
    }
    MatrixD cov(d, d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        auto x = centered.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) {
                cov(i, j) += x[i] * x[j];
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) /= static_cast<double>(n);
            cov(j, i) = cov(i, j);
        }
    }

    Pca2Result result;
    int it1 = 0;
    auto [axis1, lambda1] = power_iteration(cov, options, it1);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            cov(i, j) -= lambda1 * axis1[i] * axis1[j];
        }
    }
    int it2 = 0;
    auto [axis2, lambda2] = power_iteration(cov, options, it2);
    // Re-orthogonalize against axis1; deflation leaves rounding-level overlap.
    double overlap = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        overlap += axis1[i] * axis2[i];
    }
    for (std::size_t i = 0; i < d; ++i) {
        axis2[i] -= overlap * axis1[i];
    }
    const double n2 = norm(axis2);
    if (n2 > 0.0) {
        for (double& x : axis2) {
            x /= n2;
        }
    }
    if (lambda2 > lambda1) {
        std::swap(axis1, axis2);
        std::swap(lambda1, lambda2);
    }
    canonicalize_sign(axis1);
    canonicalize_sign(axis2);

    result.eigenvalues = {lambda1, lambda2};
    result.iterations = it1 + it2;
    result.projection = MatrixD(n, 2);
    for (std::size_t r = 0; r < n; ++r) {
        double p1 = 0.0;
        double p2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            p1 += centered(r, c) * axis1[c];
            p2 += centered(r, c) * axis2[c];
        }
        result.projection(r, 0) = p1;
        result.projection(r, 1) = p2;
    }
    result.axes = {std::move(axis1), std::move(axis2)};
    return result;
}

}  // namespace avprune
