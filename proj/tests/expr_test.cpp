// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "icsr/expr.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

namespace icsr::expr {
namespace {

using icsr::testing::count_nodes;

std::vector<double> pt(std::initializer_list<double> v) { return v; }

TEST(Parse, CoefficientTimesSineExpandsToSixNodes) {
    Expression e = parse("c*sin(x) + c", 1);
    ASSERT_EQ(e.op(), Op::Add);
    const Expression& lhs = e.child(0);
    ASSERT_EQ(lhs.op(), Op::Mul);
    EXPECT_EQ(lhs.child(0).op(), Op::Coefficient);
    ASSERT_EQ(lhs.child(1).op(), Op::Sin);
    EXPECT_EQ(lhs.child(1).child(0).op(), Op::Variable);
    EXPECT_EQ(e.child(1).op(), Op::Coefficient);
    EXPECT_EQ(count_nodes(e), 6u);
    EXPECT_EQ(complexity(e), 6u);
    EXPECT_EQ(coefficient_count(e), 2u);
}

TEST(Parse, SingleVariable) {
    Expression e = parse("x", 1);
    EXPECT_EQ(e.op(), Op::Variable);
    EXPECT_EQ(e.index(), 0);
    EXPECT_EQ(complexity(e), 1u);
    EXPECT_EQ(coefficient_count(e), 0u);
}

TEST(Parse, TwoVariablePower) {
    Expression e = parse("x1^x2", 2);
    ASSERT_EQ(e.op(), Op::Pow);
    EXPECT_EQ(e.child(0).index(), 0);
    EXPECT_EQ(e.child(1).index(), 1);
    EXPECT_EQ(complexity(e), 3u);
    EXPECT_EQ(coefficient_count(e), 0u);
}

TEST(Parse, VariableAliases) {
    EXPECT_EQ(parse("x_1 + x_2", 2), parse("x1 + x2", 2));
    EXPECT_EQ(parse("x**2", 1), parse("x^2", 1));
}

TEST(Parse, PowerBindsTighterThanUnaryMinus) {
    Expression e = parse("-x^2", 1);
    ASSERT_EQ(e.op(), Op::Neg);
    EXPECT_EQ(e.child(0).op(), Op::Pow);
    EXPECT_DOUBLE_EQ(*evaluate(e, {}, pt({3.0})), -9.0);
}

TEST(Parse, PowerIsRightAssociative) {
    Expression e = parse("2^3^2", 1);
    EXPECT_DOUBLE_EQ(*evaluate(e, {}, pt({0.0})), 512.0);
    EXPECT_EQ(e.child(1).op(), Op::Pow);
}

TEST(Parse, UnaryMinusInExponent) {
    EXPECT_DOUBLE_EQ(*evaluate(parse("2^-1", 1), {}, pt({0.0})), 0.5);
}

TEST(Parse, LeftAssociativeOperators) {
    EXPECT_DOUBLE_EQ(*evaluate(parse("8/4/2", 1), {}, pt({0.0})), 1.0);
    EXPECT_DOUBLE_EQ(*evaluate(parse("10 - 4 - 3", 1), {}, pt({0.0})), 3.0);
    EXPECT_DOUBLE_EQ(*evaluate(parse("1 + 2*3", 1), {}, pt({0.0})), 7.0);
}

TEST(Parse, CoefficientsNumberedLeftToRight) {
    Expression e = parse("c*x + c/x", 1);
    std::vector<double> c{2.0, 3.0};
    EXPECT_DOUBLE_EQ(*evaluate(e, c, pt({1.5})), 2.0 * 1.5 + 3.0 / 1.5);
}

TEST(Parse, LiteralsAndConstants) {
    EXPECT_DOUBLE_EQ(*evaluate(parse("2.5e-1*x", 1), {}, pt({4.0})), 1.0);
    EXPECT_DOUBLE_EQ(*evaluate(parse("pi", 1), {}, pt({0.0})), M_PI);
    EXPECT_DOUBLE_EQ(*evaluate(parse(".5", 1), {}, pt({0.0})), 0.5);
}

TEST(Parse, ErrorsCarryPosition) {
    struct Case {
        const char* text;
        int dim;
        std::size_t position;
    };
    const Case cases[] = {
        {"(x + c", 1, 0},  // points at the unmatched parenthesis
        {"foo(x)", 1, 0},  // unknown identifier
        {"x + x2", 1, 4},  // wrong variable for d=1
        {"x + c", 2, 0},   // bare x in two dimensions
        {"x +", 1, 3},     // dangling operator
        {"x $ 2", 1, 2},   // stray character
        {"sin x", 1, 4},   // function without parentheses
        {"x x", 1, 2},     // trailing input
    };
    for (const auto& c : cases) {
        try {
            parse(c.text, c.dim);
            ADD_FAILURE() << "accepted '" << c.text << "'";
        } catch (const ParseError& e) {
            EXPECT_EQ(e.position(), c.position) << c.text << ": " << e.what();
        }
    }
}

TEST(Parse, RejectsBadDimensionality) {
    EXPECT_THROW(parse("x", 3), std::invalid_argument);
    EXPECT_THROW(parse("x", 0), std::invalid_argument);
}

TEST(Evaluate, Examples) {
    EXPECT_DOUBLE_EQ(*evaluate(parse("c*x", 1), std::vector<double>{2.0}, pt({3.0})), 6.0);
    EXPECT_FALSE(evaluate(parse("log(x)", 1), {}, pt({-1.0})).has_value());
    EXPECT_DOUBLE_EQ(*evaluate(parse("sqrt(x)", 1), {}, pt({4.0})), 2.0);
}

TEST(Evaluate, UndefinedCases) {
    EXPECT_FALSE(evaluate(parse("1/x", 1), {}, pt({0.0})));
    EXPECT_FALSE(evaluate(parse("sqrt(x)", 1), {}, pt({-1e-9})));
    EXPECT_FALSE(evaluate(parse("exp(x)", 1), {}, pt({1000.0})));
    EXPECT_FALSE(evaluate(parse("x^(1/3)", 1), {}, pt({-8.0})));
    EXPECT_FALSE(evaluate(parse("log(x)", 1), {}, pt({0.0})));
    // Undefinedness propagates through later operations.
    EXPECT_FALSE(evaluate(parse("0*log(x)", 1), {}, pt({-1.0})));
}

TEST(Evaluate, IntegerPowersOfNegativeBases) {
    EXPECT_DOUBLE_EQ(*evaluate(parse("x^3", 1), {}, pt({-2.0})), -8.0);
    EXPECT_DOUBLE_EQ(*evaluate(parse("x^-2", 1), {}, pt({-2.0})), 0.25);
}

TEST(Evaluate, SpecialFunctions) {
    auto v = [](const char* text, double x) { return *evaluate(parse(text, 1), {}, pt({x})); };
    EXPECT_DOUBLE_EQ(v("erf(x)", 0.5), std::erf(0.5));
    EXPECT_DOUBLE_EQ(v("tanh(x)", 0.3), std::tanh(0.3));
    EXPECT_DOUBLE_EQ(v("abs(x)", -2.0), 2.0);
    EXPECT_DOUBLE_EQ(v("cosh(x) - sinh(x)", 0.7), std::cosh(0.7) - std::sinh(0.7));
}

TEST(Complexity, Examples) {
    EXPECT_EQ(complexity(parse("sqrt(x)", 1)), 2u);
    Expression poly = parse("x^3 + x^2 + x", 1);
    // +(+(^(x,3),^(x,2)),x)
    Expression manual = Expression::binary(
        Op::Add,
        Expression::binary(
            Op::Add,
            Expression::binary(Op::Pow, Expression::variable(0, 1), Expression::literal(3)),
            Expression::binary(Op::Pow, Expression::variable(0, 1), Expression::literal(2))),
        Expression::variable(0, 1));
    EXPECT_EQ(poly, manual);
    EXPECT_EQ(count_nodes(manual), 9u);
    EXPECT_EQ(complexity(poly), 9u);
    EXPECT_EQ(complexity(parse("c", 1)), 1u);
    EXPECT_EQ(complexity(parse("-x", 1)), 2u);
}

TEST(Complexity, OperatorCountSkipsLeaves) {
    EXPECT_EQ(operator_count(parse("x", 1)), 0u);
    EXPECT_EQ(operator_count(parse("sqrt(x)", 1)), 1u);
    EXPECT_EQ(operator_count(parse("c*sin(x) + c", 1)), 3u);
    testing::ExprGenerator gen;
    for (int i = 0; i < 500; ++i) {
        Expression e = gen(4);
        std::size_t leaves = 0;
        std::function<void(const Expression&)> walk = [&](const Expression& n) {
            leaves += n.children().empty() ? 1 : 0;
            for (const auto& c : n.children()) {
                walk(c);
            }
        };
        walk(e);
        EXPECT_EQ(operator_count(e) + leaves, complexity(e));
    }
}

TEST(Canonicalize, CommutedSumsShareKey) {
    EXPECT_EQ(canonicalize(parse("c + c*x", 1)).key, canonicalize(parse("c*x + c", 1)).key);
}

TEST(Canonicalize, LiteralBecomesHintedSlot) {
    Skeleton s = canonicalize(parse("2.5*x", 1));
    EXPECT_EQ(s.key, "c*x");
    ASSERT_EQ(s.slots, 1u);
    ASSERT_EQ(s.hints.size(), 1u);
    ASSERT_TRUE(s.hints[0].has_value());
    EXPECT_DOUBLE_EQ(*s.hints[0], 2.5);
}

TEST(Canonicalize, AbsorbsCoefficientProducts) {
    EXPECT_EQ(canonicalize(parse("c*c*x", 1)).key, "c*x");
    EXPECT_EQ(canonicalize(parse("c*x + c + c", 1)).key, canonicalize(parse("c*x + c", 1)).key);
    EXPECT_EQ(canonicalize(parse("exp(c)*x", 1)).key, "c*x");
    EXPECT_EQ(canonicalize(parse("-c*x", 1)).key, "c*x");
    EXPECT_EQ(canonicalize(parse("c/c", 1)).key, "c");
}

TEST(Canonicalize, DistinctFormsStayDistinct) {
    EXPECT_NE(canonicalize(parse("c*sin(x)", 1)).key, canonicalize(parse("c*cos(x)", 1)).key);
    EXPECT_NE(canonicalize(parse("c*x1", 2)).key, canonicalize(parse("c*x2", 2)).key);
    EXPECT_NE(canonicalize(parse("x - c", 1)).key, canonicalize(parse("c - x", 1)).key);
}

TEST(Canonicalize, SlotCountMatchesPlaceholders) {
    Skeleton s = canonicalize(parse("c*x^2 + 3*sin(c*x) + 1", 1));
    EXPECT_EQ(s.slots, coefficient_count(s.expression));
    EXPECT_EQ(s.hints.size(), s.slots);
}

TEST(Render, Examples) {
    Expression e = Expression::binary(
        Op::Add,
        Expression::binary(Op::Mul, Expression::coefficient(0), Expression::variable(0, 1)),
        Expression::coefficient(1));
    EXPECT_EQ(render(e), "c*x + c");
    std::vector<double> coefs{2.0, 1.0};
    EXPECT_EQ(render(e, coefs), "2.00000*x + 1.00000");
    EXPECT_EQ(render(Expression::binary(Op::Pow, Expression::variable(0, 2),
                                        Expression::variable(1, 2))),
              "x1^x2");
}

TEST(Render, NegativeCoefficientsAreParenthesized) {
    Expression e = parse("c*x - c", 1);
    std::vector<double> coefs{-2.0, 1.5};
    EXPECT_EQ(render(e, coefs), "(-2.00000)*x - 1.50000");
    Expression back = parse(render(e, coefs), 1);
    EXPECT_DOUBLE_EQ(*evaluate(back, {}, pt({2.0})), -5.5);
}

TEST(Render, ParenthesizesByPrecedence) {
    EXPECT_EQ(render(parse("(x + 1)^2", 1)), "(x + 1)^2");
    EXPECT_EQ(render(parse("x^(2^3)", 1)), "x^2^3");
    EXPECT_EQ(render(parse("(x^2)^3", 1)), "(x^2)^3");
    EXPECT_EQ(render(parse("x - (c - x)", 1)), "x - (c - x)");
    EXPECT_EQ(render(parse("(-x)^2", 1)), "(-x)^2");
}

// ---------------------------------------------------------------------------
// Properties

TEST(ExprProperty, RenderParseRoundTrip) {
    for (int dim : {1, 2}) {
        icsr::testing::ExprGenerator gen;
        gen.dim = dim;
        gen.rng.seed(static_cast<std::uint64_t>(100 + dim));
        for (int i = 0; i < 2000; ++i) {
            Expression e = gen(5);
            const std::string text = render(e);
            Expression back = parse(text, dim);
            ASSERT_EQ(back, e) << text;
            EXPECT_EQ(complexity(back), complexity(e));
            EXPECT_EQ(complexity(e), count_nodes(e));
        }
    }
}

TEST(ExprProperty, CompiledProgramMatchesTreeWalk) {
    icsr::testing::ExprGenerator gen;
    gen.dim = 2;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.5);
    for (int i = 0; i < 2000; ++i) {
        Expression e = gen(5);
        Program p(e);
        std::vector<double> coefs(coefficient_count(e));
        for (auto& c : coefs) {
            c = normal(rng);
        }
        for (int k = 0; k < 5; ++k) {
            std::vector<double> x{normal(rng), normal(rng)};
            auto tree = evaluate(e, coefs, x);
            double compiled = p(coefs, x);
            if (!tree) {
                EXPECT_TRUE(std::isnan(compiled)) << render(e);
            } else {
                EXPECT_EQ(compiled, *tree) << render(e);
            }
        }
    }
}

TEST(ExprProperty, CanonicalFormIsSound) {
    icsr::testing::ExprGenerator gen;
    gen.dim = 2;
    gen.rng.seed(23);
    std::mt19937_64 rng(29);
    std::normal_distribution<double> normal(0.0, 1.0);
    int compared = 0;
    for (int i = 0; i < 3000; ++i) {
        Expression e = gen(4);
        Skeleton s = canonicalize(e);
        ASSERT_EQ(s.slots, coefficient_count(s.expression));
        ASSERT_EQ(canonicalize(s.expression).key, s.key) << render(e);
        for (int k = 0; k < 4; ++k) {
            std::vector<double> source(coefficient_count(e));
            for (auto& c : source) {
                c = normal(rng);
            }
            std::vector<double> mapped = s.map_coefficients(source);
            ASSERT_EQ(mapped.size(), s.slots);
            std::vector<double> x{normal(rng), normal(rng)};
            auto a = evaluate(e, source, x);
            auto b = evaluate(s.expression, mapped, x);
            if (a && b) {
                ++compared;
                EXPECT_NEAR(*a, *b, 1e-12 * std::max(1.0, std::abs(*a)))
                    << render(e) << " vs " << render(s.expression);
            }
        }
    }
    EXPECT_GT(compared, 3000);
}

TEST(ExprProperty, HintsReproduceLiteralExpression) {
    icsr::testing::ExprGenerator gen;
    gen.coefficients = false;
    gen.rng.seed(31);
    std::mt19937_64 rng(37);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        Expression e = gen(4);
        Skeleton s = canonicalize(e);
        std::vector<double> mapped = s.map_coefficients({});
        std::vector<double> x{normal(rng)};
        auto a = evaluate(e, {}, x);
        auto b = evaluate(s.expression, mapped, x);
        if (a && b) {
            EXPECT_NEAR(*a, *b, 1e-12 * std::max(1.0, std::abs(*a))) << render(e);
        }
    }
}

} // namespace
} // namespace icsr::expr
