// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace avprune {

enum class ScheduleKind { kSigmoid, kExponential };

std::string_view to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(std::string_view s);

/// Layer-wise pruning-ratio schedule. Ratios apply to layers 0..layers-2;
/// the final layer never prunes.
struct PruneScheduleConfig {
    double p_init = 0.0;
    double p_final = 0.2;
    double t_mid = 0.5;
    double beta = 20.0;
    std::size_t layers = 28;
    ScheduleKind kind = ScheduleKind::kSigmoid;

    /// Throws InvalidInput naming the offending field.
    void validate() const;
};

/// 1 / (1 + exp(-beta * (l / (L - 2) - t_mid))) for 0 <= l <= L - 2.
double sigmoid_value(std::size_t layer, double t_mid, double beta, std::size_t layers);

double prune_ratio(std::size_t layer, const PruneScheduleConfig& cfg);

/// Per-layer retained fraction r_l of the audiovisual tokens entering layer l.
struct RetentionTrace {
    std::vector<double> r;

    double mean() const;
};

/// r_0 = r0, r_{l+1} = r_l * (1 - p_l).
RetentionTrace retention_trace(const PruneScheduleConfig& cfg, double r0);
double mean_retention(const PruneScheduleConfig& cfg, double r0);

struct Calibration {
    /// Two-phase approximation; only defined for a sigmoid with p_init = 0, t_mid = 0.5
    /// and a positive phase-two target.
    std::optional<double> closed_form;
    double bisection = 0.0;
    double achieved_mean = 0.0;
    int iterations = 0;
};

/// Solves for p_final so the per-layer mean retention hits `target_mean`.
/// `cfg.p_final` is ignored. Throws Infeasible when p_final = 0.999 still
/// leaves the mean above target.
Calibration calibrate_p_final(double target_mean, double r0, const PruneScheduleConfig& cfg);

/// 1 - ((2 * target - r0) / r0)^(1 / floor(L / 4)).
std::optional<double> closed_form_p_final(double target_mean, double r0, std::size_t layers);

}  // namespace avprune
