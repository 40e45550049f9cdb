// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "icsr/dataset.hpp"
#include "icsr/engine.hpp"
#include "icsr/expr.hpp"
#include "icsr/llm.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace icsr::bench {

enum class Split { Train, Test };
std::string to_string(Split split);

struct Sampler {
    enum class Kind { Uniform, Grid };
    Kind kind{Kind::Uniform};
    std::vector<double> lo;
    std::vector<double> hi;
    std::size_t count{0};
};

struct Interval {
    double lo{-std::numeric_limits<double>::infinity()};
    double hi{std::numeric_limits<double>::infinity()};
};

struct BenchmarkSpec {
    std::string name;
    std::string suite;
    int dim{1};
    // Ground truth with its literal constants.
    std::string expression;
    // The ground truth written as a c-parameterized skeleton.
    std::string oracle;
    Sampler train;
    Sampler test;
    // Per-variable region where the ground truth is defined.
    std::vector<Interval> domain;

    expr::Expression truth() const;
    std::size_t truth_complexity() const;
};

struct SuiteInfo {
    std::string name;
    double reference_complexity{0.0};
    std::vector<std::string> equations;
};

// Parses a benchmark definition document; throws std::invalid_argument on
// malformed entries.
std::vector<BenchmarkSpec> load_benchmarks(const nlohmann::json& document);
std::vector<SuiteInfo> load_suites(const nlohmann::json& document);

// Shipped definitions (35 equations in four suites).
const std::vector<BenchmarkSpec>& benchmarks();
const std::vector<SuiteInfo>& suites();
const BenchmarkSpec& find_benchmark(const std::string& name);
// Equation names of a suite; "all" lists every equation.
std::vector<std::string> suite_equations(const std::string& suite);

// Fixed per (equation, split): datasets do not depend on the method seed.
std::uint64_t data_seed(const BenchmarkSpec& spec, Split split);

// Equispaced points on a box. One dimension: `count` points including both
// ends. Two dimensions: a ceil(sqrt(count))^2 grid, row-major, truncated to
// `count` points.
std::vector<double> grid_points(const std::vector<double>& lo, const std::vector<double>& hi,
                                std::size_t count);

Dataset sample(const BenchmarkSpec& spec, Split split, std::uint64_t seed);
Dataset sample(const BenchmarkSpec& spec, Split split);

// A final expression as stored by a run: skeleton text plus fitted values.
struct FinalCandidate {
    expr::Expression expression;
    std::vector<double> coefficients;
    std::size_t complexity{0};
};

// Ground truth as a candidate (no coefficients).
FinalCandidate truth_candidate(const BenchmarkSpec& spec);
FinalCandidate final_candidate(const engine::Candidate& candidate);

struct InDomainResult {
    double r2{0.0};
    std::size_t complexity{0};
    std::size_t points{0};
    std::size_t undefined{0};
    // Undefined points beyond the trim budget, excluded from r2.
    std::size_t excess_failures{0};
};

// Undefined predictions count as the worst points and are trimmed first; if
// they exceed the trim budget, r2 is computed on the defined points and the
// excess is reported.
InDomainResult evaluate_on(const FinalCandidate& candidate, const Dataset& test,
                           double trim_fraction);
InDomainResult evaluate_in_domain(const FinalCandidate& candidate, const BenchmarkSpec& spec,
                                  double trim_fraction = 0.05);

// Test box widened about its center to (1 + 2e) times its half-width, then
// clipped to the validity domain. Empty if clipping removes it.
std::optional<std::vector<Interval>> extended_region(const BenchmarkSpec& spec, double extension);

struct OodPoint {
    double extension{0.0};
    // Raw R^2 (untrimmed by default); -inf if the candidate is undefined on more
    // points than the trim budget allows.
    double r2{0.0};
    std::size_t points{0};
    bool skipped{false};
};

std::vector<OodPoint> evaluate_ood(const FinalCandidate& candidate, const BenchmarkSpec& spec,
                                   const std::vector<double>& extensions,
                                   double trim_fraction = 0.0);

// ---------------------------------------------------------------------------
// Suites

struct RunCell {
    std::string suite;
    std::string equation;
    int seed{0};
    // "ok", "no_valid_seed" or "error".
    std::string status;
    double r2{0.0};
    std::size_t complexity{0};
    std::string message;
    std::optional<FinalCandidate> candidate;
};

struct BenchmarkSummary {
    std::string suite;
    std::size_t cells{0};
    std::size_t missing{0};
    double r2_mean{0.0};
    double r2_sem{0.0};
    double complexity_mean{0.0};
    double complexity_sem{0.0};
    double truth_complexity{0.0};
    double reference_complexity{0.0};
};

struct OodRow {
    std::string suite;
    double extension{0.0};
    double mean_r2_clamped{0.0};
    double negative_fraction{0.0};
    std::size_t count{0};
};

struct EvalReport {
    std::vector<RunCell> cells;
    std::vector<BenchmarkSummary> summaries;
    std::vector<OodRow> ood;
};

double mean(const std::vector<double>& values);
// Sample standard deviation over sqrt(n); 0 for fewer than two values.
double standard_error(const std::vector<double>& values);

// Per suite: average the available cells of each seed, then mean and SEM
// across seeds.
std::vector<BenchmarkSummary> summarize(const std::vector<RunCell>& cells);
std::vector<OodRow> summarize_ood(
    const std::vector<std::pair<std::string, std::vector<OodPoint>>>& curves);
// Average ground-truth complexity of a suite.
double suite_truth_complexity(const std::string& suite);
// Same average with expr::operator_count.
double suite_truth_operator_count(const std::string& suite);

using BackendFactory =
    std::function<std::unique_ptr<llm::Backend>(const BenchmarkSpec& spec, int seed)>;
using RunObserver = std::function<void(const RunCell&, const engine::RunRecord*)>;

struct SuiteOptions {
    std::vector<std::string> equations;
    std::vector<int> seeds{1, 2, 3, 4, 5};
    engine::EngineConfig engine;
    int jobs{1};
    // Called once per finished run, serialized.
    RunObserver on_complete;
    // Per-run event sink factory; may be empty.
    std::function<engine::EventSink(const BenchmarkSpec&, int seed)> sink_factory;
};

EvalReport run_suite(const SuiteOptions& options, const BackendFactory& factory);

// Replay script that proposes the oracle skeleton in every call.
nlohmann::json oracle_script(const BenchmarkSpec& spec, int calls);

// CSV tables; numbers printed with fixed precision so that identical inputs
// give identical bytes.
// r2 is written with round-trip precision so tables can be re-aggregated.
std::string runs_csv(const std::vector<RunCell>& cells);
std::string summary_csv(const std::vector<BenchmarkSummary>& summaries);
std::string ood_csv(const std::vector<OodRow>& rows);
// Shortest text that parses back to the same double; "inf", "-inf", "nan".
std::string format_real(double value);

} // namespace icsr::bench
