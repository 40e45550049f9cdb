// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "icsr/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace icsr::fit {

void FitConfig::validate() const {
    if (restarts < 1) {
        throw std::invalid_argument("restarts must be >= 1");
    }
    if (init_draws < 1) {
        throw std::invalid_argument("init_draws must be >= 1");
    }
    if (max_iterations < 0) {
        throw std::invalid_argument("max_iterations must be >= 0");
    }
    if (!(gradient_tolerance > 0.0 && step_tolerance > 0.0 && residual_tolerance > 0.0)) {
        throw std::invalid_argument("tolerances must be > 0");
    }
}

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double probe_step(double c) { return std::max(1e-6, 1e-6 * std::abs(c)); }

std::size_t evaluate_residuals(const expr::Program& model, std::span<const double> coefficients,
                               const Dataset& data, double penalty, Eigen::VectorXd& out,
                               std::vector<char>* defined) {
    const std::size_t n = data.size();
    out.resize(static_cast<Eigen::Index>(n));
    if (defined != nullptr) {
        defined->assign(n, 1);
    }
    std::size_t undefined = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = model(coefficients, data.point(i));
        if (std::isfinite(v)) {
            out[static_cast<Eigen::Index>(i)] = data.y[i] - v;
        } else {
            out[static_cast<Eigen::Index>(i)] = penalty;
            ++undefined;
            if (defined != nullptr) {
                (*defined)[i] = 0;
            }
        }
    }
    return undefined;
}

// True SSE with every point defined, or +inf.
double exact_sse(const expr::Program& model, std::span<const double> coefficients,
                 const Dataset& data) {
    if (!std::all_of(coefficients.begin(), coefficients.end(),
                     [](double c) { return std::isfinite(c); })) {
        return inf;
    }
    Eigen::VectorXd r;
    if (evaluate_residuals(model, coefficients, data, 0.0, r, nullptr) != 0) {
        return inf;
    }
    double sse = r.squaredNorm();
    return std::isfinite(sse) ? sse : inf;
}

Eigen::MatrixXd jacobian_impl(const expr::Program& model, std::span<const double> coefficients,
                              const Dataset& data, double penalty, std::vector<char>* pinned) {
    const std::size_t n = data.size();
    const std::size_t m = coefficients.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(m));
    Eigen::VectorXd r0;
    Eigen::VectorXd rp;
    Eigen::VectorXd rm;
    std::vector<char> d0;
    std::vector<char> dp;
    std::vector<char> dm;
    evaluate_residuals(model, coefficients, data, penalty, r0, &d0);
    std::vector<double> probe(coefficients.begin(), coefficients.end());
    if (pinned != nullptr) {
        pinned->assign(m, 0);
    }
    for (std::size_t j = 0; j < m; ++j) {
        const double h = probe_step(coefficients[j]);
        probe[j] = coefficients[j] + h;
        evaluate_residuals(model, probe, data, penalty, rp, &dp);
        probe[j] = coefficients[j] - h;
        evaluate_residuals(model, probe, data, penalty, rm, &dm);
        probe[j] = coefficients[j];
        const auto col = static_cast<Eigen::Index>(j);
        if (pinned != nullptr) {
            for (std::size_t i = 0; i < n; ++i) {
                if (d0[i] && (!dp[i] || !dm[i])) {
                    (*pinned)[j] = 1;
                    break;
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            if (dp[i] && dm[i]) {
                J(row, col) = (rp[row] - rm[row]) / (2.0 * h);
            } else if (d0[i] && dp[i]) {
                J(row, col) = (rp[row] - r0[row]) / h;
            } else if (d0[i] && dm[i]) {
                J(row, col) = (r0[row] - rm[row]) / h;
            }
        }
    }
    return J;
}

// A slot is pinned when an infinitesimal change of it makes some currently
// defined point undefined (an integer exponent over negative bases, say).
// Pinned slots keep their value; the others are optimized around them.
Eigen::MatrixXd free_jacobian(const expr::Program& model, std::span<const double> c,
                              const Dataset& data, double penalty, std::vector<char>& pinned) {
    Eigen::MatrixXd J = jacobian_impl(model, c, data, penalty, &pinned);
    for (std::size_t j = 0; j < pinned.size(); ++j) {
        if (pinned[j]) {
            J.col(static_cast<Eigen::Index>(j)).setZero();
        }
    }
    return J;
}

struct RestartOutcome {
    std::vector<double> coefficients;
    bool converged{false};
};

RestartOutcome levenberg_marquardt(const expr::Program& model, std::vector<double> c,
                                   const Dataset& data, const FitConfig& config) {
    const auto m = static_cast<Eigen::Index>(c.size());
    Eigen::VectorXd r;
    evaluate_residuals(model, c, data, config.undefined_penalty, r, nullptr);
    double cost = 0.5 * r.squaredNorm();

    RestartOutcome out;
    if (cost == 0.0) {
        out.coefficients = std::move(c);
        out.converged = true;
        return out;
    }

    std::vector<char> pinned;
    Eigen::MatrixXd J = free_jacobian(model, c, data, config.undefined_penalty, pinned);
    Eigen::MatrixXd A = J.transpose() * J;
    Eigen::VectorXd g = J.transpose() * r;
    double mu = 1e-3 * std::max(A.diagonal().maxCoeff(), 1e-12);
    double nu = 2.0;

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() < config.gradient_tolerance) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd scale = A.diagonal().cwiseMax(1e-12);
        Eigen::MatrixXd damped = A;
        damped.diagonal() += mu * scale;
        Eigen::VectorXd step = damped.ldlt().solve(-g);
        for (std::size_t j = 0; j < pinned.size(); ++j) {
            if (pinned[j]) {
                step[static_cast<Eigen::Index>(j)] = 0.0;
            }
        }
        if (!step.allFinite()) {
            mu *= nu;
            nu *= 2.0;
            if (!std::isfinite(mu)) {
                break;
            }
            continue;
        }

        Eigen::Map<const Eigen::VectorXd> current(c.data(), m);
        if (step.norm() <= config.step_tolerance * (current.norm() + config.step_tolerance)) {
            out.converged = true;
            break;
        }

        std::vector<double> trial(c.size());
        for (Eigen::Index j = 0; j < m; ++j) {
            trial[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)] + step[j];
        }
        Eigen::VectorXd r_trial;
        evaluate_residuals(model, trial, data, config.undefined_penalty, r_trial, nullptr);
        const double cost_trial = 0.5 * r_trial.squaredNorm();
        const double predicted = 0.5 * step.dot(mu * scale.cwiseProduct(step) - g);
        const double rho = predicted > 0.0 ? (cost - cost_trial) / predicted : -1.0;

        if (std::isfinite(cost_trial) && rho > 0.0) {
            const double reduction = cost - cost_trial;
            c = std::move(trial);
            r = std::move(r_trial);
            cost = cost_trial;
            mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
            nu = 2.0;
            if (cost == 0.0 || reduction <= config.residual_tolerance * cost) {
                out.converged = true;
                break;
            }
            J = free_jacobian(model, c, data, config.undefined_penalty, pinned);
            A = J.transpose() * J;
            g = J.transpose() * r;
        } else {
            mu *= nu;
            nu *= 2.0;
            if (!std::isfinite(mu) || mu > 1e300) {
                break;
            }
        }
    }
    out.coefficients = std::move(c);
    return out;
}

bool has_hints(const expr::Skeleton& skeleton) {
    return std::any_of(skeleton.hints.begin(), skeleton.hints.end(),
                       [](const auto& h) { return h.has_value(); });
}

std::vector<double> initial_point(const expr::Program& model, const expr::Skeleton& skeleton,
                                  const Dataset& data, bool hints_first, const FitConfig& config,
                                  Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> start(skeleton.slots);
    auto draw = [&](bool use_hints) {
        for (std::size_t j = 0; j < skeleton.slots; ++j) {
            start[j] = normal(rng);
            if (use_hints && j < skeleton.hints.size() && skeleton.hints[j]) {
                start[j] = *skeleton.hints[j];
            }
        }
    };
    for (int attempt = 0; attempt < config.init_draws; ++attempt) {
        draw(hints_first);
        if (std::isfinite(exact_sse(model, start, data))) {
            return start;
        }
    }
    if (hints_first || !config.warm_start || !has_hints(skeleton)) {
        return start;
    }
    for (int attempt = 0; attempt < config.init_draws; ++attempt) {
        draw(true);
        if (std::isfinite(exact_sse(model, start, data))) {
            return start;
        }
    }
    return start;
}

} // namespace

std::size_t residuals(const expr::Program& model, std::span<const double> coefficients,
                      const Dataset& data, double penalty, Eigen::VectorXd& out) {
    return evaluate_residuals(model, coefficients, data, penalty, out, nullptr);
}

Eigen::MatrixXd jacobian(const expr::Program& model, std::span<const double> coefficients,
                         const Dataset& data, double penalty) {
    return jacobian_impl(model, coefficients, data, penalty, nullptr);
}

FitResult fit(const expr::Skeleton& skeleton, const Dataset& data, const FitConfig& config,
              Rng& rng) {
    config.validate();
    if (data.empty()) {
        throw std::invalid_argument("cannot fit an empty dataset");
    }
    const expr::Program model(skeleton.expression);
    FitResult result;
    result.sse = inf;

    if (skeleton.slots == 0) {
        double sse = exact_sse(model, {}, data);
        result.restart_sse.push_back(sse);
        result.valid = std::isfinite(sse);
        result.sse = sse;
        result.converged = true;
        result.best_restart = result.valid ? 0 : -1;
        return result;
    }

    for (int restart = 0; restart < config.restarts; ++restart) {
        std::vector<double> start =
            initial_point(model, skeleton, data, restart == 0 && config.warm_start, config, rng);
        RestartOutcome outcome = levenberg_marquardt(model, std::move(start), data, config);
        double sse = exact_sse(model, outcome.coefficients, data);
        result.restart_sse.push_back(sse);
        if (sse < result.sse) {
            result.sse = sse;
            result.coefficients = std::move(outcome.coefficients);
            result.converged = outcome.converged;
            result.best_restart = restart;
            result.valid = true;
        }
    }
    if (!result.valid) {
        result.coefficients.assign(skeleton.slots, 0.0);
    }
    return result;
}

} // namespace icsr::fit
