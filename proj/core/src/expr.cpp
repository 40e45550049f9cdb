// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "icsr/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace icsr::expr {

int arity(Op op) noexcept {
    switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow:
        return 2;
    case Op::Variable:
    case Op::Coefficient:
    case Op::Literal:
        return 0;
    default:
        return 1;
    }
}

bool is_leaf(Op op) noexcept { return arity(op) == 0; }

std::string_view op_name(Op op) noexcept {
    switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pow: return "^";
    case Op::Neg: return "-";
    case Op::Sqrt: return "sqrt";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Abs: return "abs";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Sinh: return "sinh";
    case Op::Cosh: return "cosh";
    case Op::Tanh: return "tanh";
    case Op::Erf: return "erf";
    case Op::Variable: return "x";
    case Op::Coefficient: return "c";
    case Op::Literal: return "#";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Expression

Expression::Expression() : node_(std::make_shared<detail::Node>()) {}

Expression Expression::variable(int index, int dimensionality) {
    if (dimensionality < 1 || index < 0 || index >= dimensionality) {
        throw std::invalid_argument("variable index out of range for dimensionality");
    }
    auto n = std::make_shared<detail::Node>();
    n->op = Op::Variable;
    n->index = index;
    n->dimensionality = dimensionality;
    return Expression(std::move(n));
}

Expression Expression::coefficient(int slot) {
    auto n = std::make_shared<detail::Node>();
    n->op = Op::Coefficient;
    n->index = slot;
    return Expression(std::move(n));
}

Expression Expression::literal(double value) {
    auto n = std::make_shared<detail::Node>();
    n->op = Op::Literal;
    n->value = value;
    return Expression(std::move(n));
}

Expression Expression::unary(Op op, Expression operand) {
    if (arity(op) != 1) {
        throw std::invalid_argument("not a unary operator");
    }
    auto n = std::make_shared<detail::Node>();
    n->op = op;
    n->children.push_back(std::move(operand));
    return Expression(std::move(n));
}

Expression Expression::binary(Op op, Expression lhs, Expression rhs) {
    if (arity(op) != 2) {
        throw std::invalid_argument("not a binary operator");
    }
    auto n = std::make_shared<detail::Node>();
    n->op = op;
    n->children.push_back(std::move(lhs));
    n->children.push_back(std::move(rhs));
    return Expression(std::move(n));
}

Op Expression::op() const noexcept { return node_->op; }
int Expression::index() const noexcept { return node_->index; }
int Expression::dimensionality() const noexcept { return node_->dimensionality; }
double Expression::value() const noexcept { return node_->value; }
std::span<const Expression> Expression::children() const noexcept { return node_->children; }

const Expression& Expression::child(std::size_t i) const { return node_->children.at(i); }

bool operator==(const Expression& a, const Expression& b) noexcept {
    if (a.node_ == b.node_) {
        return true;
    }
    if (a.op() != b.op() || a.index() != b.index()) {
        return false;
    }
    if (a.op() == Op::Literal && !(a.value() == b.value())) {
        return false;
    }
    if (a.op() == Op::Variable && a.dimensionality() != b.dimensionality()) {
        return false;
    }
    auto ca = a.children();
    auto cb = b.children();
    return std::equal(ca.begin(), ca.end(), cb.begin(), cb.end());
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::standard() {
    Vocabulary v;
    for (Op op : {Op::Sqrt, Op::Exp, Op::Log, Op::Abs, Op::Sin, Op::Cos, Op::Tan, Op::Sinh,
                  Op::Cosh, Op::Tanh, Op::Erf}) {
        v.functions.emplace(std::string(op_name(op)), op);
    }
    v.constants.emplace("pi", std::numbers::pi);
    return v;
}

ParseError::ParseError(std::string message, std::size_t position)
    : std::runtime_error(message + " at position " + std::to_string(position)),
      position_(position) {}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    Parser(std::string_view text, int dimensionality, const Vocabulary& vocabulary)
        : text_(text), dim_(dimensionality), vocab_(vocabulary) {}

    Expression run() {
        skip_space();
        if (pos_ == text_.size()) {
            throw ParseError("empty expression", pos_);
        }
        Expression e = parse_sum();
        skip_space();
        if (pos_ != text_.size()) {
            if (text_[pos_] == ')') {
                throw ParseError("unbalanced ')'", pos_);
            }
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        }
        return e;
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char ch) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == ch) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool accept_pow() {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '^') {
            ++pos_;
            return true;
        }
        if (pos_ + 1 < text_.size() && text_[pos_] == '*' && text_[pos_ + 1] == '*') {
            pos_ += 2;
            return true;
        }
        return false;
    }

    bool peek_mul_div(char& which) {
        skip_space();
        if (pos_ >= text_.size()) {
            return false;
        }
        char ch = text_[pos_];
        if (ch == '/' || (ch == '*' && !(pos_ + 1 < text_.size() && text_[pos_ + 1] == '*'))) {
            which = ch;
            return true;
        }
        return false;
    }

    Expression parse_sum() {
        Expression lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = Expression::binary(Op::Add, std::move(lhs), parse_product());
            } else if (accept('-')) {
                lhs = Expression::binary(Op::Sub, std::move(lhs), parse_product());
            } else {
                return lhs;
            }
        }
    }

    Expression parse_product() {
        Expression lhs = parse_unary();
        char which = 0;
        while (peek_mul_div(which)) {
            ++pos_;
            Op op = which == '*' ? Op::Mul : Op::Div;
            lhs = Expression::binary(op, std::move(lhs), parse_unary());
        }
        return lhs;
    }

    Expression parse_unary() {
        if (accept('-')) {
            return Expression::unary(Op::Neg, parse_unary());
        }
        if (accept('+')) {
            return parse_unary();
        }
        return parse_power();
    }

    Expression parse_power() {
        Expression base = parse_primary();
        if (accept_pow()) {
            return Expression::binary(Op::Pow, std::move(base), parse_unary());
        }
        return base;
    }

    Expression parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) {
            throw ParseError("unexpected end of input", pos_);
        }
        char ch = text_[pos_];
        if (ch == '(') {
            std::size_t open = pos_;
            ++pos_;
            Expression inner = parse_sum();
            if (!accept(')')) {
                throw ParseError("unbalanced '('", open);
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
            return parse_number();
        }
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            return parse_identifier();
        }
        throw ParseError(std::string("unexpected '") + ch + "'", pos_);
    }

    Expression parse_number() {
        std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
                ++pos_;
            }
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                digits();
            } else {
                pos_ = mark;
            }
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(value)) {
            throw ParseError("malformed number", start);
        }
        return Expression::literal(value);
    }

    Expression parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        std::string_view name = text_.substr(start, pos_ - start);

        if (auto fn = vocab_.functions.find(name); fn != vocab_.functions.end()) {
            if (!accept('(')) {
                throw ParseError("expected '(' after " + std::string(name), pos_);
            }
            std::size_t open = pos_ - 1;
            Expression arg = parse_sum();
            if (!accept(')')) {
                throw ParseError("unbalanced '('", open);
            }
            return Expression::unary(fn->second, std::move(arg));
        }
        if (name == "c") {
            return Expression::coefficient(next_slot_++);
        }
        if (auto var = variable_index(name)) {
            return Expression::variable(*var, dim_);
        }
        if (auto k = vocab_.constants.find(name); k != vocab_.constants.end()) {
            return Expression::literal(k->second);
        }
        if (looks_like_variable(name)) {
            throw ParseError("variable '" + std::string(name) + "' not valid for dimensionality " +
                                 std::to_string(dim_),
                             start);
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }

    std::optional<int> variable_index(std::string_view name) const {
        if (dim_ == 1) {
            if (name == "x") {
                return 0;
            }
            return std::nullopt;
        }
        for (int i = 0; i < dim_; ++i) {
            std::string plain = "x" + std::to_string(i + 1);
            std::string under = "x_" + std::to_string(i + 1);
            if (name == plain || name == under) {
                return i;
            }
        }
        return std::nullopt;
    }

    static bool looks_like_variable(std::string_view name) {
        if (name.empty() || name[0] != 'x') {
            return false;
        }
        return std::all_of(name.begin() + 1, name.end(), [](char ch) {
            return ch == '_' || std::isdigit(static_cast<unsigned char>(ch));
        });
    }

    std::string_view text_;
    std::size_t pos_{0};
    int dim_;
    const Vocabulary& vocab_;
    int next_slot_{0};
};

} // namespace

Expression parse(std::string_view text, int dimensionality) {
    static const Vocabulary vocabulary = Vocabulary::standard();
    return parse(text, dimensionality, vocabulary);
}

Expression parse(std::string_view text, int dimensionality, const Vocabulary& vocabulary) {
    if (dimensionality < 1 || dimensionality > 2) {
        throw std::invalid_argument("dimensionality must be 1 or 2");
    }
    return Parser(text, dimensionality, vocabulary).run();
}

// ---------------------------------------------------------------------------
// Structural queries

std::size_t coefficient_count(const Expression& e) {
    if (e.op() == Op::Coefficient) {
        return 1;
    }
    std::size_t n = 0;
    for (const auto& c : e.children()) {
        n += coefficient_count(c);
    }
    return n;
}

std::size_t complexity(const Expression& e) {
    std::size_t n = 1;
    for (const auto& c : e.children()) {
        n += complexity(c);
    }
    return n;
}

std::size_t operator_count(const Expression& e) {
    if (e.children().empty()) {
        return 0;
    }
    std::size_t n = 1;
    for (const auto& c : e.children()) {
        n += operator_count(c);
    }
    return n;
}

int variables_used(const Expression& e) {
    int n = e.op() == Op::Variable ? e.index() + 1 : 0;
    for (const auto& c : e.children()) {
        n = std::max(n, variables_used(c));
    }
    return n;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double apply_unary(Op op, double a) {
    switch (op) {
    case Op::Neg: return -a;
    case Op::Sqrt: return a < 0.0 ? std::nan("") : std::sqrt(a);
    case Op::Exp: return std::exp(a);
    case Op::Log: return a <= 0.0 ? std::nan("") : std::log(a);
    case Op::Abs: return std::abs(a);
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Tan: return std::tan(a);
    case Op::Sinh: return std::sinh(a);
    case Op::Cosh: return std::cosh(a);
    case Op::Tanh: return std::tanh(a);
    case Op::Erf: return std::erf(a);
    default: return std::nan("");
    }
}

double apply_binary(Op op, double a, double b) {
    switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return b == 0.0 ? std::nan("") : a / b;
    case Op::Pow: return std::pow(a, b);
    default: return std::nan("");
    }
}

double eval_node(const Expression& e, std::span<const double> coefficients,
                 std::span<const double> point) {
    const double nan = std::nan("");
    switch (e.op()) {
    case Op::Variable:
        return static_cast<std::size_t>(e.index()) < point.size() ? point[e.index()] : nan;
    case Op::Coefficient:
        return static_cast<std::size_t>(e.index()) < coefficients.size() ? coefficients[e.index()]
                                                                          : nan;
    case Op::Literal:
        return e.value();
    default:
        break;
    }
    double a = eval_node(e.child(0), coefficients, point);
    if (!std::isfinite(a)) {
        return nan;
    }
    double r = 0.0;
    if (arity(e.op()) == 1) {
        r = apply_unary(e.op(), a);
    } else {
        double b = eval_node(e.child(1), coefficients, point);
        if (!std::isfinite(b)) {
            return nan;
        }
        r = apply_binary(e.op(), a, b);
    }
    return std::isfinite(r) ? r : nan;
}

} // namespace

std::optional<double> evaluate(const Expression& e, std::span<const double> coefficients,
                               std::span<const double> point) {
    double v = eval_node(e, coefficients, point);
    if (!std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

Program::Program(const Expression& e) {
    std::size_t depth = 0;
    auto emit = [&](auto&& self, const Expression& node) -> void {
        for (const auto& c : node.children()) {
            self(self, c);
        }
        code_.push_back({node.op(), node.index(), node.value()});
        if (node.op() == Op::Coefficient) {
            coefficients_ = std::max(coefficients_, static_cast<std::size_t>(node.index()) + 1);
        }
        int a = arity(node.op());
        depth = depth + 1 - static_cast<std::size_t>(a);
        max_depth_ = std::max(max_depth_, depth);
    };
    emit(emit, e);
}

double Program::operator()(std::span<const double> coefficients,
                           std::span<const double> point) const {
    constexpr std::size_t inline_depth = 64;
    std::array<double, inline_depth> small{};
    std::vector<double> large;
    double* stack = small.data();
    if (max_depth_ > inline_depth) {
        large.resize(max_depth_);
        stack = large.data();
    }
    const double nan = std::nan("");
    std::size_t top = 0;
    for (const Instr& in : code_) {
        double r = 0.0;
        switch (in.op) {
        case Op::Variable:
            r = static_cast<std::size_t>(in.index) < point.size() ? point[in.index] : nan;
            break;
        case Op::Coefficient:
            r = static_cast<std::size_t>(in.index) < coefficients.size() ? coefficients[in.index]
                                                                          : nan;
            break;
        case Op::Literal:
            r = in.value;
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow:
            top -= 2;
            r = apply_binary(in.op, stack[top], stack[top + 1]);
            break;
        default:
            top -= 1;
            r = apply_unary(in.op, stack[top]);
            break;
        }
        if (!std::isfinite(r)) {
            return nan;
        }
        stack[top++] = r;
    }
    return top == 1 ? stack[0] : nan;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

int precedence(const Expression& e) {
    switch (e.op()) {
    case Op::Add:
    case Op::Sub:
        return 1;
    case Op::Mul:
    case Op::Div:
        return 2;
    case Op::Neg:
        return 3;
    case Op::Pow:
        return 4;
    case Op::Literal:
        // Negative literals print as "(-v)".
        return 5;
    default:
        return 5;
    }
}

std::string format_literal(double v) {
    char buf[64];
    for (int digits = 15; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        double back = 0.0;
        std::string_view s(buf);
        std::from_chars(s.data(), s.data() + s.size(), back);
        if (back == v) {
            break;
        }
    }
    return buf;
}

std::string format_coefficient(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%#.6g", v);
    return buf;
}

std::string variable_name(const Expression& e) {
    if (e.dimensionality() <= 1) {
        return "x";
    }
    return "x" + std::to_string(e.index() + 1);
}

struct Renderer {
    std::span<const double> coefficients;
    bool substitute{false};

    std::string leaf(const Expression& e) const {
        switch (e.op()) {
        case Op::Variable:
            return variable_name(e);
        case Op::Coefficient:
            if (substitute && static_cast<std::size_t>(e.index()) < coefficients.size()) {
                double v = coefficients[e.index()];
                std::string s = format_coefficient(v);
                return v < 0.0 ? "(" + s + ")" : s;
            }
            return "c";
        default: {
            std::string s = format_literal(e.value());
            return e.value() < 0.0 ? "(" + s + ")" : s;
        }
        }
    }

    std::string wrap(const Expression& e, bool parens) const {
        std::string s = (*this)(e);
        return parens ? "(" + s + ")" : s;
    }

    std::string operator()(const Expression& e) const {
        if (is_leaf(e.op())) {
            return leaf(e);
        }
        if (e.op() == Op::Neg) {
            return "-" + wrap(e.child(0), precedence(e.child(0)) < 3);
        }
        if (arity(e.op()) == 1) {
            return std::string(op_name(e.op())) + "(" + (*this)(e.child(0)) + ")";
        }
        const int p = precedence(e);
        const Expression& lhs = e.child(0);
        const Expression& rhs = e.child(1);
        if (e.op() == Op::Pow) {
            // Base must bind tighter than ^; exponent is parsed at unary level.
            return wrap(lhs, !is_leaf(lhs.op()) && precedence(lhs) <= 4) + "^" +
                   wrap(rhs, precedence(rhs) < 3);
        }
        std::string l = wrap(lhs, precedence(lhs) < p);
        std::string r = wrap(rhs, precedence(rhs) <= p);
        std::string_view sym = op_name(e.op());
        if (p == 1) {
            return l + " " + std::string(sym) + " " + r;
        }
        return l + std::string(sym) + r;
    }
};

} // namespace

std::string render(const Expression& e) { return Renderer{{}, false}(e); }

std::string render(const Expression& e, std::span<const double> coefficients) {
    return Renderer{coefficients, true}(e);
}

// ---------------------------------------------------------------------------
// Canonicalization

namespace {

struct Canon {
    Op op{Op::Coefficient};
    int index{0};
    int dimensionality{0};
    // Operands; Add and Mul are n-ary here.
    std::vector<Canon> kids;
    // For coefficient nodes: value in terms of the source expression.
    std::optional<Expression> source;
    std::string key;
};

Canon make_coefficient(Expression source) {
    Canon c;
    c.op = Op::Coefficient;
    c.source = std::move(source);
    c.key = "c";
    return c;
}

std::string compose_key(Op op, const std::vector<Canon>& kids) {
    std::string k = "(";
    k += op == Op::Neg ? std::string_view("neg") : op_name(op);
    for (const auto& kid : kids) {
        k += ' ';
        k += kid.key;
    }
    k += ')';
    return k;
}

Canon canon(const Expression& e) {
    switch (e.op()) {
    case Op::Literal:
    case Op::Coefficient:
        return make_coefficient(e);
    case Op::Variable: {
        Canon v;
        v.op = Op::Variable;
        v.index = e.index();
        v.dimensionality = e.dimensionality();
        v.key = "x" + std::to_string(e.index());
        return v;
    }
    default:
        break;
    }

    if (arity(e.op()) == 1) {
        Canon k = canon(e.child(0));
        if (k.op == Op::Coefficient) {
            return make_coefficient(Expression::unary(e.op(), *k.source));
        }
        Canon u;
        u.op = e.op();
        u.kids.push_back(std::move(k));
        u.key = compose_key(u.op, u.kids);
        return u;
    }

    Canon a = canon(e.child(0));
    Canon b = canon(e.child(1));
    if (a.op == Op::Coefficient && b.op == Op::Coefficient) {
        return make_coefficient(Expression::binary(e.op(), *a.source, *b.source));
    }

    Canon out;
    out.op = e.op();
    if (e.op() != Op::Add && e.op() != Op::Mul) {
        out.kids.push_back(std::move(a));
        out.kids.push_back(std::move(b));
        out.key = compose_key(out.op, out.kids);
        return out;
    }

    std::vector<Canon> operands;
    for (Canon* side : {&a, &b}) {
        if (side->op == e.op()) {
            for (auto& k : side->kids) {
                operands.push_back(std::move(k));
            }
        } else {
            operands.push_back(std::move(*side));
        }
    }
    std::optional<Expression> merged;
    std::vector<Canon> rest;
    for (auto& k : operands) {
        if (k.op == Op::Coefficient) {
            merged = merged ? Expression::binary(e.op(), *merged, *k.source) : *k.source;
        } else {
            rest.push_back(std::move(k));
        }
    }
    if (merged) {
        rest.push_back(make_coefficient(*merged));
    }
    if (rest.size() == 1) {
        return std::move(rest.front());
    }
    std::stable_sort(rest.begin(), rest.end(),
                     [](const Canon& x, const Canon& y) { return x.key < y.key; });
    out.kids = std::move(rest);
    out.key = compose_key(out.op, out.kids);
    return out;
}

Expression emit(const Canon& c, std::vector<Expression>& sources) {
    switch (c.op) {
    case Op::Coefficient: {
        int slot = static_cast<int>(sources.size());
        sources.push_back(*c.source);
        return Expression::coefficient(slot);
    }
    case Op::Variable:
        return Expression::variable(c.index, c.dimensionality);
    default:
        break;
    }
    if (arity(c.op) == 1) {
        return Expression::unary(c.op, emit(c.kids[0], sources));
    }
    Expression acc = emit(c.kids[0], sources);
    for (std::size_t i = 1; i < c.kids.size(); ++i) {
        acc = Expression::binary(c.op, std::move(acc), emit(c.kids[i], sources));
    }
    return acc;
}

} // namespace

Skeleton canonicalize(const Expression& e) {
    Canon root = canon(e);
    Skeleton s;
    s.expression = emit(root, s.slot_sources);
    s.slots = s.slot_sources.size();
    s.key = render(s.expression);
    s.hints.reserve(s.slots);
    for (const auto& src : s.slot_sources) {
        if (coefficient_count(src) == 0) {
            s.hints.push_back(evaluate(src, {}, {}));
        } else {
            s.hints.push_back(std::nullopt);
        }
    }
    return s;
}

std::vector<double> Skeleton::map_coefficients(std::span<const double> source_coefficients) const {
    std::vector<double> out;
    out.reserve(slots);
    for (const auto& src : slot_sources) {
        out.push_back(evaluate(src, source_coefficients, {}).value_or(std::nan("")));
    }
    return out;
}

} // namespace icsr::expr
