// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace avprune {

enum class ErrorKind {
    kInvalidInput,
    kNotFound,
    kDegenerateInput,
    kConvergenceFailure,
    kInfeasible,
    kSchemaError,
    kIoError,
    kConfigError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), m_kind(kind) {}

    ErrorKind kind() const noexcept {
        return m_kind;
    }

private:
    ErrorKind m_kind;
};

/// Raised by power iteration when the successive-vector cosine never reaches tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& message, double residual)
        : Error(ErrorKind::kConvergenceFailure, message), m_residual(residual) {}

    double residual() const noexcept {
        return m_residual;
    }

private:
    double m_residual;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::kInvalidInput:
        return "InvalidInput";
    case ErrorKind::kNotFound:
        return "NotFound";
    case ErrorKind::kDegenerateInput:
        return "DegenerateInput";
    case ErrorKind::kConvergenceFailure:
        return "ConvergenceFailure";
    case ErrorKind::kInfeasible:
        return "Infeasible";
    case ErrorKind::kSchemaError:
        return "SchemaError";
    case ErrorKind::kIoError:
        return "IoError";
    case ErrorKind::kConfigError:
        return "ConfigError";
    }
    return "Unknown";
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        throw Error(kind, message);
    }
}

}  // namespace avprune
