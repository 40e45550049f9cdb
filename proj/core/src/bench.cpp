// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "icsr/bench.hpp"

#include "icsr/score.hpp"
#include "icsr_assets.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace icsr::bench {

std::string to_string(Split split) { return split == Split::Train ? "train" : "test"; }

// ---------------------------------------------------------------------------
// Definitions

expr::Expression BenchmarkSpec::truth() const { return expr::parse(expression, dim); }

std::size_t BenchmarkSpec::truth_complexity() const { return expr::complexity(truth()); }

namespace {

Sampler parse_sampler(const nlohmann::json& j, int dim, const std::string& name) {
    Sampler s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "uniform") {
        s.kind = Sampler::Kind::Uniform;
    } else if (kind == "grid") {
        s.kind = Sampler::Kind::Grid;
    } else {
        throw std::invalid_argument(name + ": unknown sampler kind " + kind);
    }
    s.lo = j.at("lo").get<std::vector<double>>();
    s.hi = j.at("hi").get<std::vector<double>>();
    s.count = j.at("count").get<std::size_t>();
    if (s.lo.size() != static_cast<std::size_t>(dim) || s.hi.size() != s.lo.size()) {
        throw std::invalid_argument(name + ": sampler bounds do not match dimensionality");
    }
    for (std::size_t i = 0; i < s.lo.size(); ++i) {
        if (!std::isfinite(s.lo[i]) || !std::isfinite(s.hi[i]) || !(s.lo[i] < s.hi[i])) {
            throw std::invalid_argument(name + ": sampler bounds must be finite with lo < hi");
        }
    }
    if (s.count == 0) {
        throw std::invalid_argument(name + ": sampler count must be > 0");
    }
    return s;
}

nlohmann::json shipped_document() {
    static const nlohmann::json doc = nlohmann::json::parse(assets::benchmarks_json);
    return doc;
}

} // namespace

std::vector<BenchmarkSpec> load_benchmarks(const nlohmann::json& document) {
    std::vector<BenchmarkSpec> out;
    for (const auto& j : document.at("benchmarks")) {
        BenchmarkSpec b;
        b.name = j.at("name").get<std::string>();
        b.suite = j.at("suite").get<std::string>();
        b.dim = j.at("dim").get<int>();
        if (b.dim < 1 || b.dim > 2) {
            throw std::invalid_argument(b.name + ": dimensionality must be 1 or 2");
        }
        b.expression = j.at("expression").get<std::string>();
        b.oracle = j.at("oracle").get<std::string>();
        b.train = parse_sampler(j.at("train"), b.dim, b.name);
        b.test = parse_sampler(j.at("test"), b.dim, b.name);
        b.domain.assign(static_cast<std::size_t>(b.dim), Interval{});
        if (j.contains("domain")) {
            const auto& d = j.at("domain");
            for (std::size_t i = 0; i < d.size() && i < b.domain.size(); ++i) {
                if (d[i].contains("lo")) {
                    b.domain[i].lo = d[i]["lo"].get<double>();
                }
                if (d[i].contains("hi")) {
                    b.domain[i].hi = d[i]["hi"].get<double>();
                }
            }
        }
        try {
            (void)b.truth();
            (void)expr::parse(b.oracle, b.dim);
        } catch (const expr::ParseError& e) {
            throw std::invalid_argument(b.name + ": " + e.what());
        }
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<SuiteInfo> load_suites(const nlohmann::json& document) {
    std::vector<SuiteInfo> out;
    auto specs = load_benchmarks(document);
    for (const auto& b : specs) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const SuiteInfo& s) { return s.name == b.suite; });
        if (it == out.end()) {
            SuiteInfo info;
            info.name = b.suite;
            if (document.contains("suites") && document["suites"].contains(b.suite)) {
                info.reference_complexity =
                    document["suites"][b.suite].value("reference_complexity", 0.0);
            }
            out.push_back(std::move(info));
            it = std::prev(out.end());
        }
        it->equations.push_back(b.name);
    }
    return out;
}

const std::vector<BenchmarkSpec>& benchmarks() {
    static const std::vector<BenchmarkSpec> all = load_benchmarks(shipped_document());
    return all;
}

const std::vector<SuiteInfo>& suites() {
    static const std::vector<SuiteInfo> all = load_suites(shipped_document());
    return all;
}

const BenchmarkSpec& find_benchmark(const std::string& name) {
    for (const auto& b : benchmarks()) {
        if (b.name == name) {
            return b;
        }
    }
    throw std::invalid_argument("unknown benchmark '" + name + "'");
}

std::vector<std::string> suite_equations(const std::string& suite) {
    std::vector<std::string> out;
    for (const auto& b : benchmarks()) {
        if (suite == "all" || b.suite == suite) {
            out.push_back(b.name);
        }
    }
    if (out.empty()) {
        throw std::invalid_argument("unknown suite '" + suite + "'");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling

std::uint64_t data_seed(const BenchmarkSpec& spec, Split split) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : spec.name + ":" + to_string(split)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<double> grid_points(const std::vector<double>& lo, const std::vector<double>& hi,
                                std::size_t count) {
    const std::size_t dim = lo.size();
    auto axis = [](double a, double b, std::size_t n, std::size_t i) {
        if (n == 1) {
            return a;
        }
        if (i == n - 1) {
            return b;
        }
        return a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    std::vector<double> out;
    if (dim == 1) {
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(axis(lo[0], hi[0], count, i));
        }
        return out;
    }
    if (dim != 2) {
        throw std::invalid_argument("grid_points supports one or two dimensions");
    }
    auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
    while (side * side < count) {
        ++side;
    }
    out.reserve(2 * count);
    for (std::size_t i = 0; i < side && out.size() < 2 * count; ++i) {
        for (std::size_t j = 0; j < side && out.size() < 2 * count; ++j) {
            out.push_back(axis(lo[0], hi[0], side, i));
            out.push_back(axis(lo[1], hi[1], side, j));
        }
    }
    return out;
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

Dataset sample(const BenchmarkSpec& spec, Split split, std::uint64_t seed) {
    const Sampler& s = split == Split::Train ? spec.train : spec.test;
    const expr::Program truth(spec.truth());
    Dataset d;
    d.dim = spec.dim;
    d.provenance = {spec.name, to_string(split), seed};

    if (s.kind == Sampler::Kind::Grid) {
        std::vector<double> xs = grid_points(s.lo, s.hi, s.count);
        for (std::size_t i = 0; i < s.count; ++i) {
            std::span<const double> p(xs.data() + i * spec.dim, static_cast<std::size_t>(spec.dim));
            double y = truth({}, p);
            if (!std::isfinite(y)) {
                throw std::runtime_error(spec.name + ": ground truth undefined on a grid point");
            }
            d.add(p, y);
        }
        return d;
    }

    std::mt19937_64 rng(seed);
    std::vector<double> p(static_cast<std::size_t>(spec.dim));
    constexpr int max_draws = 1000;
    while (d.size() < s.count) {
        bool ok = false;
        for (int attempt = 0; attempt < max_draws && !ok; ++attempt) {
            for (std::size_t k = 0; k < p.size(); ++k) {
                p[k] = s.lo[k] + (s.hi[k] - s.lo[k]) * unit_uniform(rng);
            }
            double y = truth({}, p);
            if (std::isfinite(y)) {
                d.add(p, y);
                ok = true;
            }
        }
        if (!ok) {
            throw std::runtime_error(spec.name + ": cannot sample a point where the ground truth "
                                                 "is defined");
        }
    }
    return d;
}

Dataset sample(const BenchmarkSpec& spec, Split split) {
    return sample(spec, split, data_seed(spec, split));
}

// ---------------------------------------------------------------------------
// Evaluation

FinalCandidate truth_candidate(const BenchmarkSpec& spec) {
    FinalCandidate c;
    c.expression = spec.truth();
    c.complexity = expr::complexity(c.expression);
    return c;
}

FinalCandidate final_candidate(const engine::Candidate& candidate) {
    FinalCandidate c;
    c.expression = candidate.skeleton.expression;
    c.coefficients = candidate.fit.coefficients;
    c.complexity = candidate.scores.complexity;
    return c;
}

namespace {

struct Trimmed {
    double r2{0.0};
    std::size_t undefined{0};
    std::size_t excess{0};
};

Trimmed trimmed_r2(const FinalCandidate& candidate, const Dataset& data, double trim_fraction) {
    const expr::Program model(candidate.expression);
    const std::size_t n = data.size();
    const auto budget =
        static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(n)));
    std::vector<std::size_t> defined;
    std::vector<double> pred(n);
    for (std::size_t i = 0; i < n; ++i) {
        pred[i] = model(candidate.coefficients, data.point(i));
        if (std::isfinite(pred[i])) {
            defined.push_back(i);
        }
    }
    Trimmed out;
    out.undefined = n - defined.size();
    std::size_t drop = 0;
    if (out.undefined <= budget) {
        drop = budget - out.undefined;
    } else {
        out.excess = out.undefined - budget;
    }
    auto sq = [&](std::size_t i) {
        double d = data.y[i] - pred[i];
        return d * d;
    };
    std::stable_sort(defined.begin(), defined.end(),
                     [&](std::size_t a, std::size_t b) { return sq(a) < sq(b); });
    defined.resize(defined.size() - std::min(drop, defined.size()));
    std::sort(defined.begin(), defined.end());
    if (defined.size() < 2) {
        out.r2 = score::degenerate_r2;
        return out;
    }
    std::vector<double> p;
    std::vector<double> t;
    for (std::size_t i : defined) {
        p.push_back(pred[i]);
        t.push_back(data.y[i]);
    }
    out.r2 = score::r_squared(p, t);
    return out;
}

} // namespace

InDomainResult evaluate_on(const FinalCandidate& candidate, const Dataset& test,
                           double trim_fraction) {
    Trimmed t = trimmed_r2(candidate, test, trim_fraction);
    InDomainResult r;
    r.r2 = t.r2;
    r.complexity = candidate.complexity;
    r.points = test.size();
    r.undefined = t.undefined;
    r.excess_failures = t.excess;
    return r;
}

InDomainResult evaluate_in_domain(const FinalCandidate& candidate, const BenchmarkSpec& spec,
                                  double trim_fraction) {
    return evaluate_on(candidate, sample(spec, Split::Test), trim_fraction);
}

std::optional<std::vector<Interval>> extended_region(const BenchmarkSpec& spec, double extension) {
    std::vector<Interval> region;
    for (int k = 0; k < spec.dim; ++k) {
        const double lo = spec.test.lo[k];
        const double hi = spec.test.hi[k];
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo) * (1.0 + 2.0 * extension);
        Interval iv{mid - half, mid + half};
        if (extension == 0.0) {
            iv = {lo, hi};
        }
        const Interval& dom = spec.domain[static_cast<std::size_t>(k)];
        iv.lo = std::max(iv.lo, dom.lo);
        iv.hi = std::min(iv.hi, dom.hi);
        if (!(iv.lo < iv.hi)) {
            return std::nullopt;
        }
        region.push_back(iv);
    }
    return region;
}

std::vector<OodPoint> evaluate_ood(const FinalCandidate& candidate, const BenchmarkSpec& spec,
                                   const std::vector<double>& extensions, double trim_fraction) {
    const expr::Program truth(spec.truth());
    std::vector<OodPoint> out;
    for (double e : extensions) {
        OodPoint point;
        point.extension = e;
        auto region = extended_region(spec, e);
        if (!region) {
            point.skipped = true;
            out.push_back(point);
            continue;
        }
        std::vector<double> lo;
        std::vector<double> hi;
        for (const auto& iv : *region) {
            lo.push_back(iv.lo);
            hi.push_back(iv.hi);
        }
        std::vector<double> xs = grid_points(lo, hi, spec.test.count);
        Dataset d;
        d.dim = spec.dim;
        d.provenance = {spec.name, "ood", 0};
        const std::size_t n = xs.size() / static_cast<std::size_t>(spec.dim);
        for (std::size_t i = 0; i < n; ++i) {
            std::span<const double> p(xs.data() + i * spec.dim, static_cast<std::size_t>(spec.dim));
            double y = truth({}, p);
            if (std::isfinite(y)) {
                d.add(p, y);
            }
        }
        point.points = d.size();
        if (d.size() < 2) {
            point.skipped = true;
            out.push_back(point);
            continue;
        }
        Trimmed t = trimmed_r2(candidate, d, trim_fraction);
        point.r2 = t.excess > 0 ? score::degenerate_r2 : t.r2;
        out.push_back(point);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation

double mean(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double standard_error(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) {
        return 0.0;
    }
    // Deviations from the first value keep identical inputs at exactly zero.
    const double shift = values.front();
    double sum = 0.0;
    double sq = 0.0;
    for (double v : values) {
        sum += v - shift;
        sq += (v - shift) * (v - shift);
    }
    const double ss = std::max(0.0, sq - sum * sum / static_cast<double>(n));
    return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

double suite_truth_complexity(const std::string& suite) {
    std::vector<double> c;
    for (const auto& b : benchmarks()) {
        if (b.suite == suite) {
            c.push_back(static_cast<double>(b.truth_complexity()));
        }
    }
    return mean(c);
}

double suite_truth_operator_count(const std::string& suite) {
    std::vector<double> c;
    for (const auto& b : benchmarks()) {
        if (b.suite == suite) {
            c.push_back(static_cast<double>(expr::operator_count(b.truth())));
        }
    }
    return mean(c);
}

std::vector<BenchmarkSummary> summarize(const std::vector<RunCell>& cells) {
    std::vector<std::string> order;
    for (const auto& s : suites()) {
        order.push_back(s.name);
    }
    for (const auto& c : cells) {
        if (std::find(order.begin(), order.end(), c.suite) == order.end()) {
            order.push_back(c.suite);
        }
    }
    std::vector<BenchmarkSummary> out;
    for (const auto& suite : order) {
        BenchmarkSummary s;
        s.suite = suite;
        std::map<int, std::pair<std::vector<double>, std::vector<double>>> per_seed;
        for (const auto& c : cells) {
            if (c.suite != suite) {
                continue;
            }
            ++s.cells;
            if (c.status != "ok") {
                ++s.missing;
                continue;
            }
            per_seed[c.seed].first.push_back(c.r2);
            per_seed[c.seed].second.push_back(static_cast<double>(c.complexity));
        }
        if (s.cells == 0) {
            continue;
        }
        std::vector<double> r2;
        std::vector<double> cx;
        for (const auto& [seed, values] : per_seed) {
            r2.push_back(mean(values.first));
            cx.push_back(mean(values.second));
        }
        s.r2_mean = mean(r2);
        s.r2_sem = standard_error(r2);
        s.complexity_mean = mean(cx);
        s.complexity_sem = standard_error(cx);
        for (const auto& info : suites()) {
            if (info.name == suite) {
                s.reference_complexity = info.reference_complexity;
                s.truth_complexity = suite_truth_complexity(suite);
            }
        }
        out.push_back(s);
    }
    return out;
}

std::vector<OodRow> summarize_ood(
    const std::vector<std::pair<std::string, std::vector<OodPoint>>>& curves) {
    std::vector<std::string> order;
    std::vector<double> extensions;
    for (const auto& [suite, points] : curves) {
        if (std::find(order.begin(), order.end(), suite) == order.end()) {
            order.push_back(suite);
        }
        for (const auto& p : points) {
            if (std::find(extensions.begin(), extensions.end(), p.extension) == extensions.end()) {
                extensions.push_back(p.extension);
            }
        }
    }
    std::sort(extensions.begin(), extensions.end());
    std::vector<OodRow> rows;
    for (const auto& suite : order) {
        for (double e : extensions) {
            OodRow row;
            row.suite = suite;
            row.extension = e;
            double clamped = 0.0;
            std::size_t negative = 0;
            for (const auto& [s, points] : curves) {
                if (s != suite) {
                    continue;
                }
                for (const auto& p : points) {
                    if (p.extension != e || p.skipped) {
                        continue;
                    }
                    ++row.count;
                    if (p.r2 < 0.0) {
                        ++negative;
                    } else {
                        clamped += p.r2;
                    }
                }
            }
            if (row.count > 0) {
                row.mean_r2_clamped = clamped / static_cast<double>(row.count);
                row.negative_fraction =
                    static_cast<double>(negative) / static_cast<double>(row.count);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Suite runner

EvalReport run_suite(const SuiteOptions& options, const BackendFactory& factory) {
    struct Task {
        const BenchmarkSpec* spec;
        int seed;
    };
    std::vector<Task> tasks;
    for (const auto& name : options.equations) {
        const BenchmarkSpec& spec = find_benchmark(name);
        for (int seed : options.seeds) {
            tasks.push_back({&spec, seed});
        }
    }

    EvalReport report;
    report.cells.resize(tasks.size());
    std::mutex observer_mutex;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const Task& task = tasks[i];
            RunCell cell;
            cell.suite = task.spec->suite;
            cell.equation = task.spec->name;
            cell.seed = task.seed;
            std::optional<engine::RunRecord> record;
            try {
                Dataset train = sample(*task.spec, Split::Train);
                engine::EngineConfig cfg = options.engine;
                cfg.seed = static_cast<std::uint64_t>(task.seed);
                auto backend = factory(*task.spec, task.seed);
                engine::EventSink sink;
                if (options.sink_factory) {
                    sink = options.sink_factory(*task.spec, task.seed);
                }
                record = engine::run_mode(train, cfg, *backend, sink);
                if (!record->best) {
                    throw engine::NoValidSeedError("run produced no valid candidate", *record);
                }
                FinalCandidate fc = final_candidate(*record->best);
                InDomainResult r = evaluate_in_domain(fc, *task.spec, cfg.score.trim_fraction);
                cell.status = "ok";
                cell.r2 = r.r2;
                cell.complexity = r.complexity;
                cell.candidate = std::move(fc);
                if (r.excess_failures > 0) {
                    cell.message = std::to_string(r.excess_failures) +
                                   " test points undefined beyond the trim budget";
                }
            } catch (const engine::NoValidSeedError& e) {
                cell.status = "no_valid_seed";
                cell.message = e.what();
                record = e.record();
            } catch (const std::exception& e) {
                cell.status = "error";
                cell.message = e.what();
            }
            if (options.on_complete) {
                std::lock_guard lock(observer_mutex);
                options.on_complete(cell, record ? &*record : nullptr);
            }
            report.cells[i] = std::move(cell);
        }
    };

    const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(tasks.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back(worker);
        }
    }
    report.summaries = summarize(report.cells);
    return report;
}

nlohmann::json oracle_script(const BenchmarkSpec& spec, int calls) {
    const std::string args = spec.dim == 1 ? "x" : "x1, x2";
    nlohmann::json script = nlohmann::json::array();
    for (int i = 0; i < calls; ++i) {
        script.push_back("f1(" + args + ") = " + spec.oracle);
    }
    return script;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fixed(double v, int digits = 6) {
    if (std::isinf(v)) {
        return v < 0 ? "-inf" : "inf";
    }
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace

std::string format_real(double v) {
    if (std::isinf(v)) {
        return v < 0 ? "-inf" : "inf";
    }
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    for (int digits = 15; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::strtod(buf, nullptr) == v) {
            break;
        }
    }
    return buf;
}

std::string runs_csv(const std::vector<RunCell>& cells) {
    std::string out = "benchmark,equation,seed,r2,complexity,status\n";
    for (const auto& c : cells) {
        out += c.suite + "," + c.equation + "," + std::to_string(c.seed) + ",";
        if (c.status == "ok") {
            out += format_real(c.r2) + "," + std::to_string(c.complexity);
        } else {
            out += ",";
        }
        out += "," + c.status + "\n";
    }
    return out;
}

std::string summary_csv(const std::vector<BenchmarkSummary>& summaries) {
    std::string out = "benchmark,cells,missing,r2_mean,r2_sem,complexity_mean,complexity_sem,"
                      "truth_complexity,reference_complexity\n";
    for (const auto& s : summaries) {
        out += s.suite + "," + std::to_string(s.cells) + "," + std::to_string(s.missing) + "," +
               fixed(s.r2_mean) + "," + fixed(s.r2_sem) + "," + fixed(s.complexity_mean, 3) +
               "," + fixed(s.complexity_sem, 3) + "," + fixed(s.truth_complexity, 3) + "," +
               fixed(s.reference_complexity, 1) + "\n";
    }
    return out;
}

std::string ood_csv(const std::vector<OodRow>& rows) {
    std::string out = "benchmark,extension,mean_r2_clamped,neg_fraction,count\n";
    for (const auto& r : rows) {
        out += r.suite + "," + fixed(r.extension, 2) + "," + fixed(r.mean_r2_clamped) + "," +
               fixed(r.negative_fraction) + "," + std::to_string(r.count) + "\n";
    }
    return out;
}

} // namespace icsr::bench
