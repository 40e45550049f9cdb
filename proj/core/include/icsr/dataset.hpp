// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace icsr {

struct Provenance {
    std::string benchmark;
    std::string split;
    std::uint64_t seed{0};
};

// Observations stored row-major: point i occupies x[i*dim, (i+1)*dim).
struct Dataset {
    int dim{1};
    std::vector<double> x;
    std::vector<double> y;
    Provenance provenance;

    std::size_t size() const noexcept { return y.size(); }
    bool empty() const noexcept { return y.empty(); }
    std::span<const double> point(std::size_t i) const {
        return std::span<const double>(x).subspan(i * static_cast<std::size_t>(dim),
                                                  static_cast<std::size_t>(dim));
    }
    void add(std::span<const double> p, double target) {
        x.insert(x.end(), p.begin(), p.end());
        y.push_back(target);
    }
};

} // namespace icsr
