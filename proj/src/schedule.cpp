// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/schedule.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "avprune/error.hpp"

namespace avprune {

namespace {

constexpr double kBisectionUpper = 0.999;
constexpr int kBisectionMaxIterations = 100;
constexpr double kCalibrationTolerance = 1e-4;

}  // namespace

std::string_view to_string(ScheduleKind kind) {
    return kind == ScheduleKind::kSigmoid ? "sigmoid" : "exponential";
}

ScheduleKind schedule_kind_from_string(std::string_view s) {
    if (s == "sigmoid") {
        return ScheduleKind::kSigmoid;
    }
    if (s == "exponential") {
        return ScheduleKind::kExponential;
    }
    throw Error(ErrorKind::kInvalidInput, "unknown schedule kind '" + std::string(s) + "'");
}

void PruneScheduleConfig::validate() const {
    require(p_init >= 0.0 && p_init < 1.0, ErrorKind::kInvalidInput, "schedule.p_init must be in [0, 1)");
    require(p_final >= 0.0 && p_final < 1.0, ErrorKind::kInvalidInput, "schedule.p_final must be in [0, 1)");
    require(p_init <= p_final, ErrorKind::kInvalidInput, "schedule.p_init must not exceed schedule.p_final");
    require(t_mid > 0.0 && t_mid < 1.0, ErrorKind::kInvalidInput, "schedule.t_mid must be in (0, 1)");
    require(beta > 0.0 && std::isfinite(beta), ErrorKind::kInvalidInput, "schedule.beta must be positive");
    require(layers >= 3, ErrorKind::kInvalidInput, "schedule.L must be >= 3");
    require(kind != ScheduleKind::kExponential || p_init > 0.0, ErrorKind::kInvalidInput,
            "schedule.p_init must be > 0 for the exponential schedule");
}

double sigmoid_value(std::size_t layer, double t_mid, double beta, std::size_t layers) {
    require(layers >= 3, ErrorKind::kInvalidInput, "sigmoid_value: L must be >= 3");
    require(layer <= layers - 2, ErrorKind::kInvalidInput, "sigmoid_value: layer must be <= L - 2");
    const double t = static_cast<double>(layer) / static_cast<double>(layers - 2);
    return 1.0 / (1.0 + std::exp(-beta * (t - t_mid)));
}

double prune_ratio(std::size_t layer, const PruneScheduleConfig& cfg) {
    cfg.validate();
    require(layer < cfg.layers, ErrorKind::kInvalidInput, "prune_ratio: layer out of range");
    if (layer == cfg.layers - 1) {
        return 0.0;
    }
    if (cfg.kind == ScheduleKind::kSigmoid) {
        return cfg.p_init + (cfg.p_final - cfg.p_init) * sigmoid_value(layer, cfg.t_mid, cfg.beta, cfg.layers);
    }
    const double t = static_cast<double>(layer) / static_cast<double>(cfg.layers - 2);
    return cfg.p_init * std::pow(cfg.p_final / cfg.p_init, t);
}

double RetentionTrace::mean() const {
    if (r.empty()) {
        return 0.0;
    }
    return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

RetentionTrace retention_trace(const PruneScheduleConfig& cfg, double r0) {
    cfg.validate();
    require(r0 > 0.0 && r0 <= 1.0, ErrorKind::kInvalidInput, "retention_trace: r0 must be in (0, 1]");
    RetentionTrace trace;
    trace.r.resize(cfg.layers);
    trace.r[0] = r0;
    for (std::size_t l = 0; l + 1 < cfg.layers; ++l) {
        trace.r[l + 1] = trace.r[l] * (1.0 - prune_ratio(l, cfg));
    }
    return trace;
}

double mean_retention(const PruneScheduleConfig& cfg, double r0) {
    return retention_trace(cfg, r0).mean();
}

std::optional<double> closed_form_p_final(double target_mean, double r0, std::size_t layers) {
    const double phase2 = 2.0 * target_mean - r0;
    const std::size_t steps = (layers / 2) / 2;
    if (phase2 <= 0.0 || steps == 0) {
        return std::nullopt;
    }
    return 1.0 - std::pow(phase2 / r0, 1.0 / static_cast<double>(steps));
}

Calibration calibrate_p_final(double target_mean, double r0, const PruneScheduleConfig& cfg) {
    require(r0 > 0.0 && r0 <= 1.0, ErrorKind::kInvalidInput, "calibrate: r0 must be in (0, 1]");
    require(target_mean > 0.0 && target_mean < r0, ErrorKind::kInvalidInput,
            "calibrate: target must satisfy 0 < target < r0");

    PruneScheduleConfig probe = cfg;
    auto mean_at = [&probe, r0](double p_final) {
        probe.p_final = p_final;
        return mean_retention(probe, r0);
    };

    Calibration out;
    if (cfg.kind == ScheduleKind::kSigmoid && cfg.p_init == 0.0 && cfg.t_mid == 0.5) {
        out.closed_form = closed_form_p_final(target_mean, r0, cfg.layers);
    }

    double lo = cfg.p_init;
    double hi = kBisectionUpper;
    if (mean_at(hi) > target_mean + kCalibrationTolerance) {
        throw Error(ErrorKind::kInfeasible, "calibrate: target mean unreachable even at p_final = 0.999");
    }
    if (mean_at(lo) <= target_mean) {
        out.bisection = lo;
        out.achieved_mean = mean_at(lo);
        return out;
    }
    // mean_retention is decreasing in p_final.
    double mid = lo;
    for (int it = 0; it < kBisectionMaxIterations; ++it) {
        mid = 0.5 * (lo + hi);
        out.iterations = it + 1;
        if (mean_at(mid) > target_mean) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15) {
            break;
        }
    }
    out.bisection = mid;
    out.achieved_mean = mean_at(mid);
    return out;
}

}  // namespace avprune
