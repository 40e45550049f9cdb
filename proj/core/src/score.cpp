// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "icsr/score.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace icsr::score {

void ScoreConfig::validate() const {
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("lambda must be >= 0");
    }
    if (max_length <= 0) {
        throw std::invalid_argument("max_length must be > 0");
    }
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("epsilon must be > 0");
    }
    if (!(trim_fraction >= 0.0 && trim_fraction < 1.0)) {
        throw std::invalid_argument("trim_fraction must be in [0, 1)");
    }
}

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, std::size_t min_size) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("predictions and targets differ in length");
    }
    if (a.size() < min_size) {
        throw std::invalid_argument("too few points");
    }
}

} // namespace

double nmse(std::span<const double> predictions, std::span<const double> targets, double epsilon) {
    check_lengths(predictions, targets, 1);
    double sse = 0.0;
    double energy = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        double d = targets[i] - predictions[i];
        sse += d * d;
        energy += targets[i] * targets[i];
    }
    return sse / (energy + epsilon);
}

Fitness fitness(double nmse, std::size_t complexity, const ScoreConfig& config) {
    double r = 1.0 / (1.0 + nmse) +
               config.lambda * std::exp(-static_cast<double>(complexity) / config.max_length);
    return {r, 1.0 / r};
}

double r_squared(std::span<const double> predictions, std::span<const double> targets) {
    check_lengths(predictions, targets, 2);
    const double n = static_cast<double>(targets.size());
    const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        double r = targets[i] - predictions[i];
        double t = targets[i] - mean;
        ss_res += r * r;
        ss_tot += t * t;
    }
    if (ss_tot == 0.0) {
        return ss_res == 0.0 ? 1.0 : degenerate_r2;
    }
    return 1.0 - ss_res / ss_tot;
}

double r_squared_trimmed(std::span<const double> predictions, std::span<const double> targets,
                         double trim_fraction) {
    check_lengths(predictions, targets, 2);
    if (!(trim_fraction >= 0.0 && trim_fraction < 1.0)) {
        throw std::invalid_argument("trim_fraction must be in [0, 1)");
    }
    const std::size_t n = targets.size();
    const auto drop = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(n)));
    if (drop == 0) {
        return r_squared(predictions, targets);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto sq = [&](std::size_t i) {
        double d = targets[i] - predictions[i];
        return d * d;
    };
    // Ties keep the earlier index.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sq(a) < sq(b); });
    order.resize(n - drop);
    std::sort(order.begin(), order.end());
    std::vector<double> p;
    std::vector<double> t;
    p.reserve(order.size());
    t.reserve(order.size());
    for (std::size_t i : order) {
        p.push_back(predictions[i]);
        t.push_back(targets[i]);
    }
    return r_squared(p, t);
}

Scores score_candidate(std::span<const double> predictions, std::span<const double> targets,
                       std::size_t complexity, const ScoreConfig& config) {
    Scores s;
    s.nmse = nmse(predictions, targets, config.epsilon);
    auto f = fitness(s.nmse, complexity, config);
    s.r = f.r;
    s.err = f.err;
    s.r2_train = targets.size() >= 2 ? r_squared(predictions, targets) : 0.0;
    s.complexity = complexity;
    return s;
}

} // namespace icsr::score
