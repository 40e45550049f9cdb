// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "icsr/dataset.hpp"
#include "icsr/expr.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace icsr::fit {

using Rng = std::mt19937_64;

struct FitConfig {
    int restarts{5};
    int max_iterations{200};
    bool warm_start{true};
    double gradient_tolerance{1e-8};
    double step_tolerance{1e-8};
    double residual_tolerance{1e-8};
    // Residual assigned to points where the model is undefined while fitting.
    double undefined_penalty{1e6};
    // Starting points are redrawn until the model is defined on every
    // training point, up to this many draws per stage (see fit()).
    int init_draws{32};

    void validate() const;
};

struct FitResult {
    std::vector<double> coefficients;
    double sse{0.0};
    bool converged{false};
    // False if no restart ended with a model defined on every training point.
    bool valid{false};
    int best_restart{-1};
    // Final SSE of every restart; +inf for restarts that ended undefined.
    std::vector<double> restart_sse;
};

// Residuals y - f(x) at `coefficients`; undefined points get `penalty`.
// Returns the number of undefined points.
std::size_t residuals(const expr::Program& model, std::span<const double> coefficients,
                      const Dataset& data, double penalty, Eigen::VectorXd& out);

// Central-difference Jacobian of the residuals with step max(1e-6, 1e-6*|c|).
// Falls back to a one-sided difference at points where one probe is undefined;
// entries with no defined probe are zero.
Eigen::MatrixXd jacobian(const expr::Program& model, std::span<const double> coefficients,
                         const Dataset& data, double penalty);

// Multi-start Levenberg-Marquardt fit of the skeleton's slots. Restart 0
// starts from the literal hints (unhinted slots ~ N(0,1)); later restarts draw
// every slot from N(0,1). A start where the model is undefined on some
// training point is redrawn; if random draws stay infeasible, hinted slots
// fall back to their hints. Slots whose perturbation would make a defined
// point undefined are held fixed during the descent. The restart with the
// lowest finite SSE wins.
FitResult fit(const expr::Skeleton& skeleton, const Dataset& data, const FitConfig& config,
              Rng& rng);

} // namespace icsr::fit
