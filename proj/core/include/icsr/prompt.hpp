// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "icsr/dataset.hpp"
#include "icsr/expr.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace icsr::prompt {

inline constexpr std::size_t max_prompt_points = 40;
inline constexpr std::size_t max_extracted_candidates = 8;

struct TrajectoryEntry {
    std::string function;
    double error{0.0};
};

struct PromptContext {
    int dim{1};
    // Points shown to the model, at most max_prompt_points.
    Dataset shown;
    std::vector<TrajectoryEntry> trajectory;
    int iteration{0};
};

// Indices of the points to display: all of them if n <= cap, otherwise a
// uniform stride over the points sorted by first coordinate.
std::vector<std::size_t> select_display_points(const Dataset& data,
                                               std::size_t cap = max_prompt_points);

PromptContext make_context(const Dataset& data, std::vector<TrajectoryEntry> trajectory = {},
                           int iteration = 0);

// "(a, b)" tuples with 4 decimals, five per line.
std::string format_points(const Dataset& shown);
// "[x]" or "[x1, x2]".
std::string variables_list(int dim);
// Trajectory lines "Function: <f>, Error: <err>", highest error first.
std::string format_trajectory(std::vector<TrajectoryEntry> entries);

std::string build_seed_prompt(const PromptContext& ctx);
// Throws std::invalid_argument if the trajectory is empty.
std::string build_loop_prompt(const PromptContext& ctx);
std::string build_random_prompt(int num_variables);

// Raw template text as shipped.
std::string_view seed_template();
std::string_view loop_template();
std::string_view random_template();

struct ParseOutcome {
    std::optional<expr::Expression> expression;
    std::string error;
};

struct ParsedCandidates {
    // Right-hand sides in response order.
    std::vector<std::string> raw;
    // Filled by parse_candidates, one per raw string.
    std::vector<ParseOutcome> outcomes;
};

// Finds lines of the form `f<n>(<vars>) = <rhs>` (also "Function:" lines),
// tolerating bullets, numbering and markdown; keeps at most
// max_extracted_candidates.
ParsedCandidates extract_candidates(std::string_view response_text);

void parse_candidates(ParsedCandidates& candidates, int dim);

} // namespace icsr::prompt
