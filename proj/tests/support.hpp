// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "icsr/dataset.hpp"
#include "icsr/expr.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace icsr::testing {

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("icsr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Node count by direct recursion over the tree.
inline std::size_t count_nodes(const expr::Expression& e) {
    std::size_t n = 1;
    for (const auto& c : e.children()) {
        n += count_nodes(c);
    }
    return n;
}

struct ExprGenerator {
    int dim{1};
    bool coefficients{true};
    bool literals{true};
    std::mt19937_64 rng{7};
    int next_slot{0};

    expr::Expression leaf() {
        std::uniform_int_distribution<int> pick(0, 3);
        switch (pick(rng)) {
        case 0:
        case 1:
            return expr::Expression::variable(
                std::uniform_int_distribution<int>(0, dim - 1)(rng), dim);
        case 2:
            if (coefficients) {
                return expr::Expression::coefficient(next_slot++);
            }
            [[fallthrough]];
        default:
            if (literals) {
                // Non-negative: parsed text "-2" is negation of a literal.
                std::uniform_int_distribution<int> k(-4, 6);
                double v = k(rng);
                if (std::bernoulli_distribution(0.5)(rng)) {
                    v += std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                }
                return expr::Expression::literal(std::abs(v));
            }
            return expr::Expression::variable(0, dim);
        }
    }

    expr::Expression operator()(int depth) {
        next_slot = 0;
        return build(depth);
    }

    expr::Expression build(int depth) {
        using expr::Op;
        if (depth <= 0 || std::bernoulli_distribution(0.25)(rng)) {
            return leaf();
        }
        static const Op binaries[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
        static const Op unaries[] = {Op::Neg,  Op::Sqrt, Op::Exp,  Op::Log,  Op::Abs, Op::Sin,
                                     Op::Cos,  Op::Tan,  Op::Sinh, Op::Cosh, Op::Tanh, Op::Erf};
        if (std::bernoulli_distribution(0.65)(rng)) {
            Op op = binaries[std::uniform_int_distribution<int>(0, 4)(rng)];
            expr::Expression lhs = build(depth - 1);
            expr::Expression rhs = build(depth - 1);
            return expr::Expression::binary(op, lhs, rhs);
        }
        Op op = unaries[std::uniform_int_distribution<int>(0, 11)(rng)];
        return expr::Expression::unary(op, build(depth - 1));
    }
};

inline Dataset make_dataset(int dim, const std::vector<std::vector<double>>& points,
                            const std::function<double(const std::vector<double>&)>& f) {
    Dataset d;
    d.dim = dim;
    for (const auto& p : points) {
        d.add(p, f(p));
    }
    return d;
}

inline std::vector<std::vector<double>> uniform_points(int dim, std::size_t n, double lo, double hi,
                                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<std::vector<double>> out(n, std::vector<double>(static_cast<std::size_t>(dim)));
    for (auto& p : out) {
        for (auto& v : p) {
            v = u(rng);
        }
    }
    return out;
}

} // namespace icsr::testing
