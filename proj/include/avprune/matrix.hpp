// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace avprune {

/// Dense row-major matrix with value semantics.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : m_rows(rows), m_cols(cols), m_data(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : m_rows(rows), m_cols(cols), m_data(std::move(data)) {
        m_data.resize(rows * cols);
    }

    std::size_t rows() const noexcept {
        return m_rows;
    }
    std::size_t cols() const noexcept {
        return m_cols;
    }
    bool empty() const noexcept {
        return m_data.empty();
    }

    T& operator()(std::size_t r, std::size_t c) {
        return m_data[r * m_cols + c];
    }
    const T& operator()(std::size_t r, std::size_t c) const {
        return m_data[r * m_cols + c];
    }

    std::span<T> row(std::size_t r) {
        return {m_data.data() + r * m_cols, m_cols};
    }
    std::span<const T> row(std::size_t r) const {
        return {m_data.data() + r * m_cols, m_cols};
    }

    std::vector<T>& data() noexcept {
        return m_data;
    }
    const std::vector<T>& data() const noexcept {
        return m_data;
    }

    /// Keeps the listed rows, in the given order.
    Matrix select_rows(std::span<const std::size_t> keep) const {
        Matrix out(keep.size(), m_cols);
        for (std::size_t i = 0; i < keep.size(); ++i) {
            auto src = row(keep[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<T> m_data;
};

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

}  // namespace avprune
