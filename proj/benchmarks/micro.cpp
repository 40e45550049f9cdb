// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "icsr/bench.hpp"
#include "icsr/engine.hpp"
#include "icsr/expr.hpp"
#include "icsr/fit.hpp"
#include "icsr/prompt.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

namespace {

using namespace icsr;

const char* const kSample = "c*exp(-c*x)*sin(c*x + c) + c*log(abs(x) + c)/(x^2 + c)";

void BM_Parse(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(expr::parse(kSample, 1));
    }
}
BENCHMARK(BM_Parse);

void BM_Canonicalize(benchmark::State& state) {
    const expr::Expression e = expr::parse(kSample, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(expr::canonicalize(e));
    }
}
BENCHMARK(BM_Canonicalize);

// Tree walk against the compiled postfix program over 1000 points.
void BM_EvaluateTree(benchmark::State& state) {
    const expr::Expression e = expr::parse(kSample, 1);
    const std::vector<double> c{0.5, 1.2, 2.0, 0.3, 1.5, 1.0, 2.0};
    for (auto _ : state) {
        double acc = 0;
        for (int i = 0; i < 1000; ++i) {
            const double x = -2.0 + 4.0 * i / 999.0;
            acc += expr::evaluate(e, c, std::span<const double>(&x, 1)).value_or(0.0);
        }
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_EvaluateTree);

void BM_EvaluateProgram(benchmark::State& state) {
    const expr::Program p(expr::parse(kSample, 1));
    const std::vector<double> c{0.5, 1.2, 2.0, 0.3, 1.5, 1.0, 2.0};
    for (auto _ : state) {
        double acc = 0;
        for (int i = 0; i < 1000; ++i) {
            const double x = -2.0 + 4.0 * i / 999.0;
            const double v = p(c, std::span<const double>(&x, 1));
            acc += std::isfinite(v) ? v : 0.0;
        }
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_EvaluateProgram);

// Five-restart fit of the oracle skeleton of one equation per suite.
void BM_FitOracle(benchmark::State& state, const char* name) {
    const auto& spec = bench::find_benchmark(name);
    const Dataset data = bench::sample(spec, bench::Split::Train);
    const expr::Skeleton sk = expr::canonicalize(expr::parse(spec.oracle, spec.dim));
    for (auto _ : state) {
        fit::Rng rng(1);
        benchmark::DoNotOptimize(fit::fit(sk, data, fit::FitConfig{}, rng));
    }
}
BENCHMARK_CAPTURE(BM_FitOracle, nguyen5, "nguyen5");
BENCHMARK_CAPTURE(BM_FitOracle, constant6, "constant6");
BENCHMARK_CAPTURE(BM_FitOracle, keijzer14, "keijzer14");
BENCHMARK_CAPTURE(BM_FitOracle, R2, "R2");

void BM_ExtractCandidates(benchmark::State& state) {
    std::string text;
    for (int i = 1; i <= 5; ++i) {
        text += "- **f" + std::to_string(i) + "(x) = " + kSample + "**\n";
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(prompt::extract_candidates(text));
    }
}
BENCHMARK(BM_ExtractCandidates);

// One oracle-replay run end to end (usually a single call and fit).
void BM_OracleRun(benchmark::State& state) {
    const auto& spec = bench::find_benchmark("nguyen7");
    const Dataset data = bench::sample(spec, bench::Split::Train);
    engine::EngineConfig cfg;
    for (auto _ : state) {
        auto backend = llm::ReplayBackend::from_json(bench::oracle_script(spec, 60));
        benchmark::DoNotOptimize(engine::run(data, cfg, *backend));
    }
}
BENCHMARK(BM_OracleRun);

} // namespace

BENCHMARK_MAIN();
