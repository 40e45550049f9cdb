// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "icsr/prompt.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <set>

namespace icsr::prompt {
namespace {

const std::filesystem::path golden_dir = std::filesystem::path(ICSR_TEST_DATA_DIR) / "golden";

// Set ICSR_UPDATE_GOLDEN=1 to rewrite the expected files.
void expect_golden(const std::string& name, const std::string& actual) {
    const auto path = golden_dir / name;
    if (std::getenv("ICSR_UPDATE_GOLDEN") != nullptr) {
        std::filesystem::create_directories(golden_dir);
        testing::spit(path, actual);
        GTEST_SKIP() << "rewrote " << path;
    }
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(testing::slurp(path), actual) << name;
}

Dataset line_data(std::size_t n) {
    Dataset d;
    d.dim = 1;
    for (std::size_t i = 0; i < n; ++i) {
        double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        d.add(std::vector<double>{x}, x * x + x);
    }
    return d;
}

Dataset plane_data() {
    Dataset d;
    d.dim = 2;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double a = i * 0.5;
            double b = j * 0.25;
            d.add(std::vector<double>{a, b}, a * b + 1.0);
        }
    }
    return d;
}

std::vector<TrajectoryEntry> sample_trajectory() {
    return {{"c*x + c", 0.951234567}, {"c*x^2 + c*x", 0.9516}, {"c", 0.99876543}};
}

TEST(Golden, SeedPrompt1D) {
    expect_golden("seed_1d.txt", build_seed_prompt(make_context(line_data(7))));
}

TEST(Golden, SeedPrompt2D) {
    expect_golden("seed_2d.txt", build_seed_prompt(make_context(plane_data())));
}

TEST(Golden, LoopPrompt1D) {
    expect_golden("loop_1d.txt",
                  build_loop_prompt(make_context(line_data(7), sample_trajectory(), 3)));
}

TEST(Golden, LoopPrompt2D) {
    expect_golden("loop_2d.txt",
                  build_loop_prompt(make_context(plane_data(), sample_trajectory(), 3)));
}

TEST(Golden, RandomPrompt) {
    expect_golden("random_1d.txt", build_random_prompt(1));
    expect_golden("random_2d.txt", build_random_prompt(2));
}

TEST(Prompt, NoPlaceholdersRemain) {
    auto ctx = make_context(line_data(7), sample_trajectory(), 1);
    for (const std::string& text :
         {build_seed_prompt(ctx), build_loop_prompt(ctx), build_random_prompt(1)}) {
        for (const char* ph : {"{points}", "{num_variables}", "{variables_list}",
                               "{previous_trajectory}"}) {
            EXPECT_EQ(text.find(ph), std::string::npos) << ph;
        }
    }
    EXPECT_NE(std::string(loop_template()).find("{previous_trajectory}"), std::string::npos);
}

TEST(Prompt, LoopNeedsTrajectory) {
    EXPECT_THROW(build_loop_prompt(make_context(line_data(5))), std::invalid_argument);
    EXPECT_THROW(build_random_prompt(3), std::invalid_argument);
}

TEST(Points, CapAtForty) {
    Dataset d = line_data(100);
    auto idx = select_display_points(d);
    ASSERT_EQ(idx.size(), 40u);
    std::set<std::size_t> unique(idx.begin(), idx.end());
    EXPECT_EQ(unique.size(), 40u);
    // Sorted by x and spread over the whole range.
    for (std::size_t i = 1; i < idx.size(); ++i) {
        EXPECT_LT(d.point(idx[i - 1])[0], d.point(idx[i])[0]);
    }
    EXPECT_EQ(idx.front(), 0u);
    EXPECT_GE(idx.back(), 95u);

    auto ctx = make_context(d);
    EXPECT_EQ(ctx.shown.size(), 40u);
    std::string text = format_points(ctx.shown);
    std::size_t tuples = 0;
    for (char ch : text) {
        tuples += ch == '(' ? 1 : 0;
    }
    EXPECT_EQ(tuples, 40u);
}

TEST(Points, SmallSetsShownWhole) {
    EXPECT_EQ(select_display_points(line_data(20)).size(), 20u);
}

TEST(Points, Formatting) {
    Dataset d;
    d.dim = 1;
    d.add(std::vector<double>{0.5}, 2.0 / 3.0);
    d.add(std::vector<double>{-1.25}, 10.0);
    EXPECT_EQ(format_points(d), "(0.5000, 0.6667), (-1.2500, 10.0000)");

    Dataset t;
    t.dim = 2;
    t.add(std::vector<double>{1.0, 2.0}, 3.0);
    EXPECT_EQ(format_points(t), "(1.0000, 2.0000, 3.0000)");
    EXPECT_EQ(variables_list(1), "[x]");
    EXPECT_EQ(variables_list(2), "[x1, x2]");
}

TEST(Points, FivePerLine) {
    std::string text = format_points(make_context(line_data(12)).shown);
    std::size_t lines = 1;
    for (char ch : text) {
        lines += ch == '\n' ? 1 : 0;
    }
    EXPECT_EQ(lines, 3u);
}

TEST(Trajectory, WorstFirst) {
    std::string text = format_trajectory(sample_trajectory());
    EXPECT_EQ(text,
              "Function: c, Error: 0.998765\n"
              "Function: c*x^2 + c*x, Error: 0.9516\n"
              "Function: c*x + c, Error: 0.951235");
}

TEST(Extract, Examples) {
    auto a = extract_candidates("f1(x) = c*x + c\nf2(x) = c*sin(x)");
    EXPECT_EQ(a.raw, (std::vector<std::string>{"c*x + c", "c*sin(x)"}));

    auto b = extract_candidates(
        "Here are my ideas:\n"
        "1. **f1(x) = c*exp(x)**\n"
        "- `f2(x) = c/x + c`\n"
        "* f3(x1, x2) = c*x1*x2.\n"
        "Function: c*log(x), Error: 0.5\n"
        "Some commentary = not a function\n");
    EXPECT_EQ(b.raw, (std::vector<std::string>{"c*exp(x)", "c/x + c", "c*x1*x2", "c*log(x)"}));

    EXPECT_TRUE(extract_candidates("no functions here").raw.empty());
    EXPECT_TRUE(extract_candidates("").raw.empty());
}

TEST(Extract, KeepsAtMostEight) {
    std::string text;
    for (int i = 1; i <= 12; ++i) {
        text += "f" + std::to_string(i) + "(x) = c*x^" + std::to_string(i) + "\n";
    }
    auto r = extract_candidates(text);
    ASSERT_EQ(r.raw.size(), max_extracted_candidates);
    EXPECT_EQ(r.raw.back(), "c*x^8");
}

TEST(Extract, ReextractionIsIdempotent) {
    const std::string response =
        "1) f1(x) = c*x + c\n"
        "2) **f2(x) = c*x^2**\n"
        "> f3(x) = c*cos(c*x);\n";
    auto first = extract_candidates(response);
    std::string rebuilt;
    for (std::size_t i = 0; i < first.raw.size(); ++i) {
        rebuilt += "f" + std::to_string(i + 1) + "(x) = " + first.raw[i] + "\n";
    }
    EXPECT_EQ(extract_candidates(rebuilt).raw, first.raw);
}

TEST(Parse, MixedOutcomes) {
    auto r = extract_candidates("f1(x) = c*x\nf2(x) = c*(x\nf3(x) = c*y");
    parse_candidates(r, 1);
    ASSERT_EQ(r.outcomes.size(), 3u);
    EXPECT_TRUE(r.outcomes[0].expression.has_value());
    EXPECT_FALSE(r.outcomes[1].expression.has_value());
    EXPECT_FALSE(r.outcomes[1].error.empty());
    EXPECT_FALSE(r.outcomes[2].expression.has_value());
}

} // namespace
} // namespace icsr::prompt
