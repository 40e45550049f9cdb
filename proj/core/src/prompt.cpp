// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "icsr/prompt.hpp"

#include "icsr_assets.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <regex>
#include <stdexcept>

namespace icsr::prompt {

namespace {

void replace_all(std::string& text, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
}

void replace_required(std::string& text, std::string_view from, std::string_view to) {
    if (text.find(from) == std::string::npos) {
        throw std::logic_error("prompt template is missing the phrase: " + std::string(from));
    }
    replace_all(text, from, to);
}

std::string variable_names(int dim) {
    return dim == 1 ? "x" : "x1, x2";
}

// Two-variable wording of the fixed phrases in the templates.
void adapt_dimension(std::string& text, int dim, bool seed) {
    if (dim == 1) {
        return;
    }
    const std::string args = variable_names(dim);
    replace_required(text, "\"f1(x) = \", \"f2(x) = \"",
                     "\"f1(" + args + ") = \", \"f2(" + args + ") = \"");
    if (seed) {
        replace_required(text, "- An independent variable symbol: x.",
                         "- Independent variable symbols: " + args + ".");
    } else {
        replace_required(text, "(x, y) coordinates", "(" + args + ", y) coordinates");
    }
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string format_error(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

std::string_view seed_template() { return assets::seed_prompt; }
std::string_view loop_template() { return assets::loop_prompt; }
std::string_view random_template() { return assets::random_prompt; }

std::vector<std::size_t> select_display_points(const Dataset& data, std::size_t cap) {
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto pa = data.point(a);
        auto pb = data.point(b);
        return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
    });
    if (n <= cap) {
        return order;
    }
    std::vector<std::size_t> picked;
    picked.reserve(cap);
    for (std::size_t i = 0; i < cap; ++i) {
        picked.push_back(order[i * n / cap]);
    }
    return picked;
}

PromptContext make_context(const Dataset& data, std::vector<TrajectoryEntry> trajectory,
                           int iteration) {
    PromptContext ctx;
    ctx.dim = data.dim;
    ctx.shown.dim = data.dim;
    ctx.shown.provenance = data.provenance;
    for (std::size_t i : select_display_points(data)) {
        ctx.shown.add(data.point(i), data.y[i]);
    }
    ctx.trajectory = std::move(trajectory);
    ctx.iteration = iteration;
    return ctx;
}

std::string format_points(const Dataset& shown) {
    std::string out;
    const std::size_t n = std::min(shown.size(), max_prompt_points);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            out += i % 5 == 0 ? ",\n" : ", ";
        }
        out += '(';
        for (double v : shown.point(i)) {
            out += format_value(v);
            out += ", ";
        }
        out += format_value(shown.y[i]);
        out += ')';
    }
    return out;
}

std::string variables_list(int dim) { return "[" + variable_names(dim) + "]"; }

std::string format_trajectory(std::vector<TrajectoryEntry> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.error > b.error; });
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0) {
            out += '\n';
        }
        out += "Function: " + entries[i].function + ", Error: " + format_error(entries[i].error);
    }
    return out;
}

std::string build_seed_prompt(const PromptContext& ctx) {
    std::string text(seed_template());
    adapt_dimension(text, ctx.dim, true);
    replace_required(text, "{points}", format_points(ctx.shown));
    return text;
}

std::string build_loop_prompt(const PromptContext& ctx) {
    if (ctx.trajectory.empty()) {
        throw std::invalid_argument("loop prompt needs a non-empty trajectory");
    }
    std::string text(loop_template());
    adapt_dimension(text, ctx.dim, false);
    replace_required(text, "{num_variables}", std::to_string(ctx.dim));
    replace_required(text, "{variables_list}", variables_list(ctx.dim));
    replace_required(text, "{previous_trajectory}", format_trajectory(ctx.trajectory));
    // Last, so point values can never be mistaken for placeholders.
    replace_required(text, "{points}", format_points(ctx.shown));
    return text;
}

std::string build_random_prompt(int num_variables) {
    if (num_variables < 1 || num_variables > 2) {
        throw std::invalid_argument("num_variables must be 1 or 2");
    }
    std::string text(random_template());
    replace_required(text, "{num_variables}", std::to_string(num_variables));
    replace_required(text, "{variables_list}", variables_list(num_variables));
    return text;
}

ParsedCandidates extract_candidates(std::string_view response_text) {
    static const std::regex numbering(R"(^\d+\s*[.)]\s*)");
    static const std::regex indicator(
        R"(^(?:function\s*:\s*)?f\d*\s*\(\s*[A-Za-z0-9_,\s]*\)\s*=\s*(.+)$)", std::regex::icase);
    static const std::regex labelled(R"(^function\s*:\s*(.+)$)", std::regex::icase);
    static const std::regex error_suffix(R"(,\s*error\s*:.*$)", std::regex::icase);

    ParsedCandidates out;
    std::size_t start = 0;
    while (start <= response_text.size() && out.raw.size() < max_extracted_candidates) {
        std::size_t end = response_text.find('\n', start);
        if (end == std::string_view::npos) {
            end = response_text.size();
        }
        std::string line(response_text.substr(start, end - start));
        start = end + 1;

        for (std::string_view junk : {"**", "`", "$"}) {
            replace_all(line, junk, "");
        }
        line = trim(line);
        while (!line.empty() && (line[0] == '-' || line[0] == '*' || line[0] == '>' ||
                                 line[0] == '#' || line[0] == '+')) {
            line = trim(std::string_view(line).substr(1));
        }
        line = std::regex_replace(line, numbering, "");

        std::smatch m;
        std::string rhs;
        if (std::regex_match(line, m, indicator)) {
            rhs = m[1].str();
        } else if (std::regex_match(line, m, labelled)) {
            rhs = m[1].str();
        } else {
            continue;
        }
        rhs = std::regex_replace(rhs, error_suffix, "");
        rhs = trim(rhs);
        while (!rhs.empty() && (rhs.back() == '.' || rhs.back() == ',' || rhs.back() == ';')) {
            rhs.pop_back();
            rhs = trim(rhs);
        }
        if (!rhs.empty()) {
            out.raw.push_back(std::move(rhs));
        }
        if (end == response_text.size()) {
            break;
        }
    }
    return out;
}

void parse_candidates(ParsedCandidates& candidates, int dim) {
    candidates.outcomes.clear();
    candidates.outcomes.reserve(candidates.raw.size());
    for (const auto& raw : candidates.raw) {
        ParseOutcome outcome;
        try {
            outcome.expression = expr::parse(raw, dim);
        } catch (const expr::ParseError& e) {
            outcome.error = e.what();
        }
        candidates.outcomes.push_back(std::move(outcome));
    }
}

} // namespace icsr::prompt
