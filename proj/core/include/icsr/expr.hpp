// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace icsr::expr {

enum class Op : std::uint8_t {
    // binary
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    // unary
    Neg,
    Sqrt,
    Exp,
    Log,
    Abs,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Erf,
    // leaves
    Variable,
    Coefficient,
    Literal,
};

int arity(Op op) noexcept;
bool is_leaf(Op op) noexcept;
// Function-call spelling ("sin"), or the operator symbol for +,-,*,/,^ and negation.
std::string_view op_name(Op op) noexcept;

class Expression;

namespace detail {
struct Node;
}

// Immutable expression tree. Copies share structure.
class Expression {
public:
    // The literal 0.
    Expression();

    static Expression variable(int index, int dimensionality);
    static Expression coefficient(int slot);
    static Expression literal(double value);
    static Expression unary(Op op, Expression operand);
    static Expression binary(Op op, Expression lhs, Expression rhs);

    Op op() const noexcept;
    // Variable index, or coefficient slot; 0 for other kinds.
    int index() const noexcept;
    // Declared dimensionality of a Variable leaf; 0 for other kinds.
    int dimensionality() const noexcept;
    double value() const noexcept;
    std::span<const Expression> children() const noexcept;
    const Expression& child(std::size_t i) const;

    friend bool operator==(const Expression& a, const Expression& b) noexcept;

private:
    explicit Expression(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const detail::Node> node_;
};

namespace detail {
struct Node {
    Op op{Op::Literal};
    int index{0};
    int dimensionality{0};
    double value{0.0};
    std::vector<Expression> children;
};
} // namespace detail

// Names accepted as unary function calls. Extend `functions` to accept aliases
// such as "ln" -> Op::Log.
struct Vocabulary {
    std::map<std::string, Op, std::less<>> functions;
    std::map<std::string, double, std::less<>> constants;

    static Vocabulary standard();
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, std::size_t position);
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// Parses `text` into an expression over `dimensionality` variables (1 or 2).
// `c` becomes a coefficient placeholder numbered left to right.
Expression parse(std::string_view text, int dimensionality);
Expression parse(std::string_view text, int dimensionality, const Vocabulary& vocabulary);

// Number of coefficient placeholders.
std::size_t coefficient_count(const Expression& e);
// Node count; every node counts 1.
std::size_t complexity(const Expression& e);
// Operators and functions only; leaves count 0.
std::size_t operator_count(const Expression& e);
// Largest variable index used plus one (0 if no variables).
int variables_used(const Expression& e);

// Tree-walking evaluation. Returns nullopt if any intermediate is not finite.
std::optional<double> evaluate(const Expression& e, std::span<const double> coefficients,
                               std::span<const double> point);

// Round-trippable text. With coefficients, placeholders are replaced by their
// values at 6 significant digits.
std::string render(const Expression& e);
std::string render(const Expression& e, std::span<const double> coefficients);

// Flat postfix program for repeated evaluation on many points.
class Program {
public:
    Program() = default;
    explicit Program(const Expression& e);

    // NaN if any intermediate is not finite.
    double operator()(std::span<const double> coefficients, std::span<const double> point) const;
    std::size_t coefficient_count() const noexcept { return coefficients_; }

private:
    struct Instr {
        Op op;
        int index;
        double value;
    };
    std::vector<Instr> code_;
    std::size_t coefficients_{0};
    std::size_t max_depth_{0};
};

// Expression whose tunable constants are all placeholders, plus the mapping
// from the source expression's coefficients and literals onto its slots.
struct Skeleton {
    Expression expression;
    std::size_t slots{0};
    std::string key;
    // For each slot, an expression over the source's coefficient slots (and
    // literals) giving the slot value that reproduces the source.
    std::vector<Expression> slot_sources;
    // Starting value for slots whose source is made of literals only.
    std::vector<std::optional<double>> hints;

    // Maps source coefficients onto this skeleton's slots. Slots whose source
    // evaluates to a non-finite value map to NaN.
    std::vector<double> map_coefficients(std::span<const double> source_coefficients) const;
};

// Literals become placeholders, placeholder-only subtrees collapse into one
// placeholder, operands of + and * are flattened and sorted by structural key,
// and slots are renumbered left to right.
Skeleton canonicalize(const Expression& e);

} // namespace icsr::expr
