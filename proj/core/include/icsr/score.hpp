// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <limits>
#include <span>

namespace icsr::score {

struct ScoreConfig {
    double lambda{0.05};
    // Maximum sequence length in the complexity bonus.
    int max_length{30};
    double epsilon{1e-9};
    double trim_fraction{0.05};

    // Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

struct Fitness {
    double r{0.0};
    double err{0.0};
};

struct Scores {
    double nmse{0.0};
    double r{0.0};
    double err{0.0};
    double r2_train{0.0};
    std::size_t complexity{0};
};

// Returned by r_squared when targets have zero variance and the fit is not exact.
inline constexpr double degenerate_r2 = -std::numeric_limits<double>::infinity();

// sum (y - yhat)^2 / (sum y^2 + epsilon). Throws std::invalid_argument on
// length mismatch or empty input.
double nmse(std::span<const double> predictions, std::span<const double> targets, double epsilon);

// r = 1/(1+nmse) + lambda*exp(-complexity/L), err = 1/r.
Fitness fitness(double nmse, std::size_t complexity, const ScoreConfig& config);

// Coefficient of determination. Needs at least two points.
double r_squared(std::span<const double> predictions, std::span<const double> targets);

// Drops floor(trim_fraction * n) points with the largest squared error, then
// computes r_squared on the remainder.
double r_squared_trimmed(std::span<const double> predictions, std::span<const double> targets,
                         double trim_fraction);

// Convenience: all training-set scores for one candidate.
Scores score_candidate(std::span<const double> predictions, std::span<const double> targets,
                       std::size_t complexity, const ScoreConfig& config);

} // namespace icsr::score
