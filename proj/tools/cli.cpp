// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "icsr/expr.hpp"
#include "icsr/score.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <optional>
#include <sstream>

namespace icsr::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using llm::ConfigError;

// ---------------------------------------------------------------------------
// Config documents

namespace {

template <class T>
void take(const json& j, const std::string& key, T& dst) {
    try {
        dst = j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

void require_object(const json& j, const std::string& key) {
    if (!j.is_object()) {
        throw ConfigError("config section '" + key + "' must be an object");
    }
}

[[noreturn]] void unknown(const std::string& key) {
    throw ConfigError("unknown config key '" + key + "'");
}

void apply_engine(const json& j, engine::EngineConfig& e) {
    require_object(j, "engine");
    for (const auto& [k, v] : j.items()) {
        const std::string key = "engine." + k;
        if (k == "seed_calls") {
            take(v, key, e.seed_calls);
        } else if (k == "max_iterations") {
            take(v, key, e.max_iterations);
        } else if (k == "top_k") {
            take(v, key, e.top_k);
        } else if (k == "functions_per_call") {
            take(v, key, e.functions_per_call);
        } else if (k == "early_stop_r2") {
            take(v, key, e.early_stop_r2);
        } else if (k == "model") {
            take(v, key, e.model);
        } else if (k == "parallel_fits") {
            take(v, key, e.parallel_fits);
        } else if (k == "mode") {
            std::string mode;
            take(v, key, mode);
            try {
                e.mode = engine::mode_from_string(mode);
            } catch (const std::invalid_argument& ex) {
                throw ConfigError(ex.what());
            }
        } else {
            unknown(key);
        }
    }
}

void apply_sampling(const json& j, engine::EngineConfig& e) {
    require_object(j, "sampling");
    for (const auto& [k, v] : j.items()) {
        const std::string key = "sampling." + k;
        if (k == "temperature") {
            take(v, key, e.sampling.temperature);
            e.schedule.start = e.sampling.temperature;
        } else if (k == "top_p") {
            take(v, key, e.sampling.top_p);
        } else if (k == "top_k") {
            take(v, key, e.sampling.top_k);
        } else if (k == "num_beams") {
            take(v, key, e.sampling.num_beams);
        } else if (k == "max_new_tokens") {
            take(v, key, e.sampling.max_new_tokens);
        } else if (k == "schedule") {
            require_object(v, key);
            for (const auto& [sk, sv] : v.items()) {
                const std::string skey = key + "." + sk;
                if (sk == "mode") {
                    std::string mode;
                    take(sv, skey, mode);
                    if (mode == "constant") {
                        e.schedule.mode = llm::TemperatureSchedule::Mode::Constant;
                    } else if (mode == "linear-decay") {
                        e.schedule.mode = llm::TemperatureSchedule::Mode::LinearDecay;
                    } else {
                        throw ConfigError("unknown temperature schedule '" + mode + "'");
                    }
                } else if (sk == "start") {
                    take(sv, skey, e.schedule.start);
                } else if (sk == "end") {
                    take(sv, skey, e.schedule.end);
                } else if (sk == "total_iterations") {
                    take(sv, skey, e.schedule.total_iterations);
                } else {
                    unknown(skey);
                }
            }
        } else {
            unknown(key);
        }
    }
}

void apply_fit(const json& j, fit::FitConfig& f) {
    require_object(j, "fit");
    for (const auto& [k, v] : j.items()) {
        const std::string key = "fit." + k;
        if (k == "restarts") {
            take(v, key, f.restarts);
        } else if (k == "max_iterations") {
            take(v, key, f.max_iterations);
        } else if (k == "warm_start") {
            take(v, key, f.warm_start);
        } else if (k == "gradient_tolerance") {
            take(v, key, f.gradient_tolerance);
        } else if (k == "step_tolerance") {
            take(v, key, f.step_tolerance);
        } else if (k == "residual_tolerance") {
            take(v, key, f.residual_tolerance);
        } else if (k == "undefined_penalty") {
            take(v, key, f.undefined_penalty);
        } else if (k == "init_draws") {
            take(v, key, f.init_draws);
        } else {
            unknown(key);
        }
    }
}

void apply_score(const json& j, score::ScoreConfig& s) {
    require_object(j, "score");
    for (const auto& [k, v] : j.items()) {
        const std::string key = "score." + k;
        if (k == "lambda") {
            take(v, key, s.lambda);
        } else if (k == "max_length") {
            take(v, key, s.max_length);
        } else if (k == "epsilon") {
            take(v, key, s.epsilon);
        } else if (k == "trim_fraction") {
            take(v, key, s.trim_fraction);
        } else {
            unknown(key);
        }
    }
}

void apply_backend(const json& j, BackendSettings& b) {
    require_object(j, "backend");
    for (const auto& [k, v] : j.items()) {
        const std::string key = "backend." + k;
        if (k == "kind") {
            take(v, key, b.kind);
        } else if (k == "endpoint") {
            take(v, key, b.endpoint);
        } else if (k == "replay_file") {
            take(v, key, b.replay_file);
        } else if (k == "replay_dir") {
            take(v, key, b.replay_dir);
        } else if (k == "timeout_seconds") {
            take(v, key, b.timeout_seconds);
        } else if (k == "retries") {
            take(v, key, b.retries);
        } else if (k == "initial_backoff_ms") {
            take(v, key, b.initial_backoff_ms);
        } else if (k == "extended_sampling") {
            take(v, key, b.extended_sampling);
        } else {
            unknown(key);
        }
    }
}

void validate(const Settings& s) {
    try {
        s.engine.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (s.backend.kind != "live" && s.backend.kind != "replay") {
        throw ConfigError("backend must be 'live' or 'replay', got '" + s.backend.kind + "'");
    }
    if (s.backend.retries < 1 || s.backend.timeout_seconds < 1 || s.backend.initial_backoff_ms < 0) {
        throw ConfigError("backend retries and timeout must be positive");
    }
    if (s.seeds.empty()) {
        throw ConfigError("at least one seed is required");
    }
    if (s.jobs < 1) {
        throw ConfigError("jobs must be >= 1");
    }
    for (double e : s.extensions) {
        if (!(e >= 0.0) || !std::isfinite(e)) {
            throw ConfigError("extensions must be finite and non-negative");
        }
    }
}

} // namespace

void apply_config(const json& document, Settings& s) {
    require_object(document, "<root>");
    for (const auto& [k, v] : document.items()) {
        if (k == "engine") {
            apply_engine(v, s.engine);
        } else if (k == "sampling") {
            apply_sampling(v, s.engine);
        } else if (k == "fit") {
            apply_fit(v, s.engine.fit);
        } else if (k == "score") {
            apply_score(v, s.engine.score);
        } else if (k == "backend") {
            apply_backend(v, s.backend);
        } else if (k == "benchmark") {
            require_object(v, k);
            for (const auto& [bk, bv] : v.items()) {
                const std::string key = "benchmark." + bk;
                if (bk == "name") {
                    take(bv, key, s.benchmark);
                } else if (bk == "suite") {
                    take(bv, key, s.suite);
                } else if (bk == "data") {
                    take(bv, key, s.data);
                } else {
                    unknown(key);
                }
            }
        } else if (k == "output") {
            require_object(v, k);
            for (const auto& [ok, ov] : v.items()) {
                if (ok == "dir") {
                    take(ov, "output.dir", s.out);
                } else {
                    unknown("output." + ok);
                }
            }
        } else if (k == "seeds") {
            take(v, k, s.seeds);
        } else if (k == "jobs") {
            take(v, k, s.jobs);
        } else if (k == "ood") {
            require_object(v, k);
            for (const auto& [ok, ov] : v.items()) {
                if (ok == "extensions") {
                    take(ov, "ood.extensions", s.extensions);
                } else {
                    unknown("ood." + ok);
                }
            }
        } else {
            unknown(k);
        }
    }
}

json to_json(const Settings& s) {
    json engine = engine::to_json(s.engine);
    json sampling = engine["sampling"];
    sampling["schedule"] = engine["schedule"];
    sampling["schedule"]["total_iterations"] = s.engine.schedule.total_iterations;
    json fit = engine["fit"];
    json score = engine["score"];
    return {
        {"engine",
         {{"seed_calls", s.engine.seed_calls},
          {"max_iterations", s.engine.max_iterations},
          {"top_k", s.engine.top_k},
          {"functions_per_call", s.engine.functions_per_call},
          {"early_stop_r2", s.engine.early_stop_r2},
          {"model", s.engine.model},
          {"mode", engine::to_string(s.engine.mode)},
          {"parallel_fits", s.engine.parallel_fits}}},
        {"sampling", sampling},
        {"fit", fit},
        {"score", score},
        {"backend",
         {{"kind", s.backend.kind},
          {"endpoint", s.backend.endpoint},
          {"replay_file", s.backend.replay_file},
          {"replay_dir", s.backend.replay_dir},
          {"timeout_seconds", s.backend.timeout_seconds},
          {"retries", s.backend.retries},
          {"initial_backoff_ms", s.backend.initial_backoff_ms},
          {"extended_sampling", s.backend.extended_sampling}}},
        {"benchmark", {{"name", s.benchmark}, {"suite", s.suite}, {"data", s.data}}},
        {"output", {{"dir", s.out}}},
        {"seeds", s.seeds},
        {"jobs", s.jobs},
        {"ood", {{"extensions", s.extensions}}},
    };
}

std::vector<int> parse_seed_list(const std::string& text) {
    std::vector<int> seeds;
    std::stringstream ss(text);
    std::string item;
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) {
            throw ConfigError("bad seed list '" + text + "'");
        }
        return v;
    };
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        auto dash = item.find('-', 1);
        if (dash == std::string::npos) {
            seeds.push_back(to_int(item));
            continue;
        }
        int lo = to_int(item.substr(0, dash));
        int hi = to_int(item.substr(dash + 1));
        if (hi < lo) {
            throw ConfigError("bad seed range '" + item + "'");
        }
        for (int s = lo; s <= hi; ++s) {
            seeds.push_back(s);
        }
    }
    if (seeds.empty()) {
        throw ConfigError("empty seed list");
    }
    return seeds;
}

// ---------------------------------------------------------------------------
// Tables

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
        auto b = f.find_first_not_of(" \t\r");
        auto e = f.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : f.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

std::optional<double> to_double(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string number(double v) {
    if (std::isnan(v)) {
        return "";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

Dataset read_csv_dataset(const fs::path& path) {
    std::stringstream in(read_text(path));
    Dataset d;
    d.provenance = {path.filename().string(), "data", 0};
    std::string line;
    std::size_t columns = 0;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto fields = split_csv_line(line);
        std::vector<double> values;
        bool numeric = true;
        for (const auto& f : fields) {
            auto v = to_double(f);
            if (!v) {
                numeric = false;
                break;
            }
            values.push_back(*v);
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;
            }
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": non-numeric row");
        }
        first = false;
        if (columns == 0) {
            columns = values.size();
            if (columns != 2 && columns != 3) {
                throw ConfigError(path.string() + ": expected columns x1[,x2],y");
            }
            d.dim = static_cast<int>(columns) - 1;
        } else if (values.size() != columns) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": inconsistent column count");
        }
        for (double v : values) {
            if (!std::isfinite(v)) {
                throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                                  ": non-finite value");
            }
        }
        d.add(std::span<const double>(values.data(), columns - 1), values.back());
    }
    if (d.empty()) {
        throw ConfigError(path.string() + ": no data rows");
    }
    return d;
}

std::vector<bench::RunCell> read_runs_csv(const fs::path& path) {
    std::stringstream in(read_text(path));
    std::string line;
    std::vector<bench::RunCell> cells;
    if (!std::getline(in, line) || line.rfind("benchmark,equation,seed", 0) != 0) {
        throw ConfigError(path.string() + ": not a runs table");
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 6) {
            throw ConfigError(path.string() + ": malformed row '" + line + "'");
        }
        bench::RunCell c;
        c.suite = f[0];
        c.equation = f[1];
        c.seed = std::atoi(f[2].c_str());
        c.status = f[5];
        if (c.status == "ok") {
            auto r2 = to_double(f[3]);
            auto cx = to_double(f[4]);
            if (!r2 || !cx) {
                throw ConfigError(path.string() + ": malformed row '" + line + "'");
            }
            c.r2 = *r2;
            c.complexity = static_cast<std::size_t>(*cx);
        }
        cells.push_back(std::move(c));
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Output

OutputDir::OutputDir(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + root_.string() + ": " + ec.message());
    }
}

void OutputDir::write_file(const std::string& name, const std::string& content) {
    std::lock_guard lock(mutex_);
    const fs::path target = root_ / name;
    fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) {
            throw ConfigError("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

void OutputDir::append_line(const std::string& name, const std::string& line) {
    std::lock_guard lock(mutex_);
    auto& stream = logs_[name];
    if (!stream) {
        const fs::path target = root_ / name;
        fs::create_directories(target.parent_path());
        stream = std::make_unique<std::ofstream>(target, std::ios::binary | std::ios::trunc);
        if (!*stream) {
            throw ConfigError("cannot write " + target.string());
        }
    }
    *stream << line << '\n';
    stream->flush();
}

void OutputDir::close_log(const std::string& name) {
    std::lock_guard lock(mutex_);
    logs_.erase(name);
}

// ---------------------------------------------------------------------------
// Backends

std::unique_ptr<llm::Backend> make_backend(const BackendSettings& b, const std::string& equation,
                                           int seed) {
    if (b.kind == "replay") {
        fs::path path;
        if (!b.replay_dir.empty()) {
            const fs::path per_seed =
                fs::path(b.replay_dir) / (equation + "-seed" + std::to_string(seed) + ".json");
            const fs::path shared = fs::path(b.replay_dir) / (equation + ".json");
            path = fs::exists(per_seed) ? per_seed : shared;
        } else if (!b.replay_file.empty()) {
            path = b.replay_file;
        } else {
            throw ConfigError("replay backend needs --replay-file or --replay-dir");
        }
        if (!fs::exists(path)) {
            throw ConfigError("replay script not found: " + path.string());
        }
        try {
            return llm::ReplayBackend::from_file(path);
        } catch (const json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }
    const char* key = std::getenv("ICSR_API_KEY");
    if (key == nullptr || *key == '\0') {
        throw ConfigError("live backend requires the ICSR_API_KEY environment variable");
    }
    if (b.endpoint.empty()) {
        throw ConfigError("live backend requires an endpoint");
    }
    llm::LiveOptions options;
    options.endpoint = b.endpoint;
    options.api_key = key;
    options.retry.attempts = b.retries;
    options.retry.initial_backoff = std::chrono::milliseconds(b.initial_backoff_ms);
    options.timeout = std::chrono::seconds(b.timeout_seconds);
    options.extended_sampling = b.extended_sampling;
    return std::make_unique<llm::LiveBackend>(options);
}

// ---------------------------------------------------------------------------
// Commands

namespace {

std::string run_name(const std::string& equation, int seed) {
    return equation + "-seed" + std::to_string(seed);
}

// Plot rows on a dense grid over the test box of a benchmark.
std::string benchmark_plot_csv(const bench::BenchmarkSpec& spec, const bench::FinalCandidate& fc) {
    const expr::Program truth(spec.truth());
    const expr::Program model(fc.expression);
    const std::size_t count = spec.dim == 1 ? 500 : 2500;
    auto xs = bench::grid_points(spec.test.lo, spec.test.hi, count);
    std::string out = spec.dim == 1 ? "x,y_true,y_pred\n" : "x1,x2,y_true,y_pred\n";
    for (std::size_t i = 0; i < count; ++i) {
        std::span<const double> p(xs.data() + i * spec.dim, static_cast<std::size_t>(spec.dim));
        for (double v : p) {
            out += number(v) + ",";
        }
        out += number(truth({}, p)) + "," + number(model(fc.coefficients, p)) + "\n";
    }
    return out;
}

std::string data_plot_csv(const Dataset& data, const bench::FinalCandidate& fc) {
    const expr::Program model(fc.expression);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto pa = data.point(a);
        auto pb = data.point(b);
        return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
    });
    std::string out = data.dim == 1 ? "x,y_true,y_pred\n" : "x1,x2,y_true,y_pred\n";
    for (std::size_t i : order) {
        for (double v : data.point(i)) {
            out += number(v) + ",";
        }
        out += number(data.y[i]) + "," + number(model(fc.coefficients, data.point(i))) + "\n";
    }
    return out;
}

std::vector<std::string> selected_equations(const Settings& s) {
    std::vector<std::string> names;
    auto add = [&](const std::string& n) {
        if (std::find(names.begin(), names.end(), n) == names.end()) {
            names.push_back(n);
        }
    };
    try {
        if (!s.suite.empty()) {
            std::stringstream ss(s.suite);
            std::string item;
            while (std::getline(ss, item, ',')) {
                for (const auto& n : bench::suite_equations(item)) {
                    add(n);
                }
            }
        }
        if (!s.benchmark.empty()) {
            std::stringstream ss(s.benchmark);
            std::string item;
            while (std::getline(ss, item, ',')) {
                add(bench::find_benchmark(item).name);
            }
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (names.empty()) {
        throw ConfigError("select equations with --suite or --benchmark");
    }
    return names;
}

json cell_json(const bench::RunCell& c) {
    json j = {{"suite", c.suite},
              {"equation", c.equation},
              {"seed", c.seed},
              {"status", c.status}};
    if (c.status == "ok") {
        j["r2"] = c.r2;
        j["complexity"] = c.complexity;
    }
    if (!c.message.empty()) {
        j["message"] = c.message;
    }
    if (c.candidate) {
        j["skeleton"] = expr::render(c.candidate->expression);
        j["coefficients"] = c.candidate->coefficients;
        j["fitted"] = expr::render(c.candidate->expression, c.candidate->coefficients);
    }
    return j;
}

void print_summaries(std::ostream& out, const std::vector<bench::BenchmarkSummary>& summaries) {
    out << std::left << std::setw(10) << "benchmark" << std::right << std::setw(7) << "cells"
        << std::setw(9) << "missing" << std::setw(22) << "R2 (mean +- sem)" << std::setw(20)
        << "C (mean +- sem)" << std::setw(10) << "C truth" << std::setw(8) << "C ref"
        << std::setw(8) << "delta" << "\n";
    for (const auto& s : summaries) {
        char r2[64];
        char cx[64];
        std::snprintf(r2, sizeof r2, "%.4f +- %.4f", s.r2_mean, s.r2_sem);
        std::snprintf(cx, sizeof cx, "%.2f +- %.2f", s.complexity_mean, s.complexity_sem);
        out << std::left << std::setw(10) << s.suite << std::right << std::setw(7) << s.cells
            << std::setw(9) << s.missing << std::setw(22) << r2 << std::setw(20) << cx
            << std::fixed << std::setprecision(2) << std::setw(10) << s.truth_complexity
            << std::setw(8) << s.reference_complexity << std::setw(8)
            << s.truth_complexity - s.reference_complexity << std::defaultfloat << "\n";
    }
}

json summaries_json(const std::vector<bench::BenchmarkSummary>& summaries) {
    json out = json::array();
    for (const auto& s : summaries) {
        out.push_back({{"benchmark", s.suite},
                       {"cells", s.cells},
                       {"missing", s.missing},
                       {"r2_mean", s.r2_mean},
                       {"r2_sem", s.r2_sem},
                       {"complexity_mean", s.complexity_mean},
                       {"complexity_sem", s.complexity_sem},
                       {"truth_complexity", s.truth_complexity},
                       {"reference_complexity", s.reference_complexity},
                       {"complexity_delta", s.truth_complexity - s.reference_complexity},
                       {"truth_operator_count", bench::suite_truth_operator_count(s.suite)},
                       {"operator_count_delta",
                        bench::suite_truth_operator_count(s.suite) - s.reference_complexity}});
    }
    return out;
}

constexpr const char* complexity_convention =
    "node count of the parsed expression tree: every operator, function, variable and "
    "constant counts 1; unary minus is a node; integer exponents are constant leaves";

int cmd_run(const Settings& s, std::ostream& out) {
    if (s.benchmark.empty() == s.data.empty()) {
        throw ConfigError("run needs exactly one of --benchmark or --data");
    }
    const int seed = s.seeds.front();
    const bench::BenchmarkSpec* spec = nullptr;
    Dataset train;
    if (!s.benchmark.empty()) {
        try {
            spec = &bench::find_benchmark(s.benchmark);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        train = bench::sample(*spec, bench::Split::Train);
    } else {
        train = read_csv_dataset(s.data);
    }
    const std::string equation = spec ? spec->name : train.provenance.benchmark;
    auto backend = make_backend(s.backend, equation, seed);

    engine::EngineConfig cfg = s.engine;
    cfg.seed = static_cast<std::uint64_t>(seed);
    OutputDir dir(s.out);
    dir.write_file("config.json", to_json(s).dump(2) + "\n");
    auto sink = [&](const json& event) { dir.append_line("run_log.jsonl", event.dump()); };

    engine::RunRecord record;
    try {
        record = engine::run_mode(train, cfg, *backend, sink);
    } catch (const engine::NoValidSeedError& e) {
        json summary = engine::summary_json(e.record());
        summary["status"] = "no_valid_seed";
        summary["message"] = e.what();
        dir.close_log("run_log.jsonl");
        dir.write_file("summary.json", summary.dump(2) + "\n");
        out << "no valid candidate: " << e.what() << "\n";
        return exit_no_valid_seed;
    }
    dir.close_log("run_log.jsonl");

    json summary = engine::summary_json(record);
    summary["status"] = "ok";
    const bench::FinalCandidate fc = bench::final_candidate(*record.best);
    if (spec) {
        auto r = bench::evaluate_in_domain(fc, *spec, cfg.score.trim_fraction);
        summary["test"] = {{"r2_trimmed", r.r2},
                           {"points", r.points},
                           {"undefined", r.undefined},
                           {"excess_failures", r.excess_failures}};
        dir.write_file("plot.csv", benchmark_plot_csv(*spec, fc));
    } else {
        dir.write_file("plot.csv", data_plot_csv(train, fc));
    }
    dir.write_file("summary.json", summary.dump(2) + "\n");

    out << "best: " << expr::render(fc.expression, fc.coefficients) << "\n";
    out << "train R2: " << record.best->scores.r2_train
        << "  complexity: " << record.best->scores.complexity
        << "  calls: " << record.budget.calls << "\n";
    if (spec) {
        out << "test R2 (trimmed): " << summary["test"]["r2_trimmed"].get<double>() << "\n";
    }
    return exit_ok;
}

int cmd_bench(const Settings& s, std::ostream& out) {
    bench::SuiteOptions options;
    options.equations = selected_equations(s);
    options.seeds = s.seeds;
    options.engine = s.engine;
    options.jobs = s.jobs;

    // Fail fast on backend configuration before scheduling any run.
    (void)make_backend(s.backend, options.equations.front(), s.seeds.front());

    OutputDir dir(s.out);
    dir.write_file("config.json", to_json(s).dump(2) + "\n");
    options.sink_factory = [&](const bench::BenchmarkSpec& spec, int seed) -> engine::EventSink {
        const std::string log = "logs/" + run_name(spec.name, seed) + ".jsonl";
        return [&dir, log](const json& event) { dir.append_line(log, event.dump()); };
    };
    options.on_complete = [&](const bench::RunCell& cell, const engine::RunRecord* record) {
        dir.close_log("logs/" + run_name(cell.equation, cell.seed) + ".jsonl");
        if (record) {
            json summary = engine::summary_json(*record);
            summary["status"] = cell.status;
            dir.write_file("runs/" + run_name(cell.equation, cell.seed) + ".json",
                           summary.dump(2) + "\n");
        }
        out << cell.equation << " seed " << cell.seed << ": " << cell.status;
        if (cell.status == "ok") {
            out << "  R2 " << cell.r2 << "  C " << cell.complexity;
        }
        out << "\n";
    };
    const Settings* settings = &s;
    bench::EvalReport report = bench::run_suite(
        options, [settings](const bench::BenchmarkSpec& spec, int seed) {
            return make_backend(settings->backend, spec.name, seed);
        });

    json cells = json::array();
    for (const auto& c : report.cells) {
        cells.push_back(cell_json(c));
    }
    dir.write_file("cells.json", json{{"cells", cells}}.dump(2) + "\n");
    dir.write_file("runs.csv", bench::runs_csv(report.cells));
    dir.write_file("summary.csv", bench::summary_csv(report.summaries));
    dir.write_file("report.json", json{{"summaries", summaries_json(report.summaries)},
                                       {"complexity_convention", complexity_convention}}
                                          .dump(2) +
                                      "\n");
    print_summaries(out, report.summaries);
    return exit_ok;
}

struct StoredCandidate {
    std::string suite;
    std::string equation;
    int seed{0};
    bench::FinalCandidate candidate;
};

std::vector<StoredCandidate> load_candidates(const fs::path& path) {
    json doc = read_json(path);
    std::vector<StoredCandidate> out;
    try {
        for (const auto& c : doc.at("cells")) {
            if (c.at("status").get<std::string>() != "ok" || !c.contains("skeleton")) {
                continue;
            }
            StoredCandidate sc;
            sc.equation = c.at("equation").get<std::string>();
            const auto& spec = bench::find_benchmark(sc.equation);
            sc.suite = spec.suite;
            sc.seed = c.at("seed").get<int>();
            sc.candidate.expression = expr::parse(c.at("skeleton").get<std::string>(), spec.dim);
            sc.candidate.coefficients = c.at("coefficients").get<std::vector<double>>();
            sc.candidate.complexity = c.value("complexity", std::size_t{0});
            if (sc.candidate.coefficients.size() !=
                expr::coefficient_count(sc.candidate.expression)) {
                throw ConfigError(path.string() + ": coefficient count mismatch for " +
                                  sc.equation);
            }
            out.push_back(std::move(sc));
        }
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return out;
}

int cmd_ood(const Settings& s, const std::string& candidates_path, bool oracle,
            std::ostream& out) {
    std::vector<StoredCandidate> candidates;
    if (oracle) {
        for (const auto& name : selected_equations(s)) {
            const auto& spec = bench::find_benchmark(name);
            candidates.push_back({spec.suite, spec.name, 0, bench::truth_candidate(spec)});
        }
    } else if (!candidates_path.empty()) {
        candidates = load_candidates(candidates_path);
    } else {
        throw ConfigError("ood needs --candidates <cells.json> or --oracle");
    }

    std::vector<std::pair<std::string, std::vector<bench::OodPoint>>> curves;
    std::string points = "benchmark,equation,seed,extension,r2,points,skipped\n";
    for (const auto& c : candidates) {
        const auto& spec = bench::find_benchmark(c.equation);
        auto curve = bench::evaluate_ood(c.candidate, spec, s.extensions);
        for (const auto& p : curve) {
            char ext[32];
            std::snprintf(ext, sizeof ext, "%.2f", p.extension);
            points += c.suite + "," + c.equation + "," + std::to_string(c.seed) + "," + ext + "," +
                      (p.skipped ? "" : bench::format_real(p.r2)) + "," +
                      std::to_string(p.points) + "," + (p.skipped ? "1" : "0") + "\n";
            if (p.skipped) {
                out << "skipped " << c.equation << " at extension " << ext
                    << ": extended region empty after domain clipping\n";
            }
        }
        curves.emplace_back(c.suite, std::move(curve));
    }
    auto rows = bench::summarize_ood(curves);
    OutputDir dir(s.out);
    dir.write_file("ood.csv", bench::ood_csv(rows));
    dir.write_file("ood_points.csv", points);
    out << bench::ood_csv(rows);
    return exit_ok;
}

int cmd_report(const Settings& s, const std::vector<std::string>& inputs, std::ostream& out) {
    if (inputs.empty()) {
        throw ConfigError("report needs at least one bench output directory or runs.csv");
    }
    std::vector<bench::RunCell> cells;
    for (const auto& input : inputs) {
        fs::path p = input;
        if (fs::is_directory(p)) {
            p /= "runs.csv";
        }
        auto more = read_runs_csv(p);
        cells.insert(cells.end(), more.begin(), more.end());
    }
    auto summaries = bench::summarize(cells);
    OutputDir dir(s.out);
    dir.write_file("runs.csv", bench::runs_csv(cells));
    dir.write_file("summary.csv", bench::summary_csv(summaries));
    print_summaries(out, summaries);
    return exit_ok;
}

int cmd_oracle(const Settings& s, std::ostream& out) {
    OutputDir dir(s.out);
    const int calls = s.engine.call_budget();
    for (const auto& name : selected_equations(s)) {
        const auto& spec = bench::find_benchmark(name);
        dir.write_file(name + ".json", bench::oracle_script(spec, calls).dump(2) + "\n");
    }
    out << "wrote oracle replay scripts to " << dir.root().string() << "\n";
    return exit_ok;
}

// Command-line overrides; applied after the config file.
struct Overrides {
    std::optional<std::string> config;
    std::optional<std::string> benchmark;
    std::optional<std::string> suite;
    std::optional<std::string> data;
    std::optional<int> seed;
    std::optional<std::string> seeds;
    std::optional<std::string> backend;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<std::string> replay_file;
    std::optional<std::string> replay_dir;
    std::optional<double> lambda;
    std::optional<int> iterations;
    std::optional<int> ns;
    std::optional<int> topk;
    std::optional<std::string> mode;
    std::optional<int> jobs;
    std::optional<std::string> out;
    std::optional<std::vector<double>> extensions;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "JSON config file");
    app->add_option("--benchmark", o.benchmark, "Equation name(s), comma separated");
    app->add_option("--suite", o.suite, "Suite name(s): nguyen, constant, keijzer, r, all");
    app->add_option("--backend", o.backend, "live or replay");
    app->add_option("--endpoint", o.endpoint, "Chat-completions base URL");
    app->add_option("--model", o.model, "Model name sent to the backend");
    app->add_option("--replay-file", o.replay_file, "Replay script (JSON array of strings)");
    app->add_option("--replay-dir", o.replay_dir, "Directory of per-equation replay scripts");
    app->add_option("--lambda", o.lambda, "Complexity bonus weight");
    app->add_option("--iterations", o.iterations, "Optimization-loop iterations");
    app->add_option("--ns", o.ns, "Seed-phase calls");
    app->add_option("--topk", o.topk, "Trajectory size");
    app->add_option("--mode", o.mode, "full, seed-only or random");
    app->add_option("--out", o.out, "Output directory");
}

Settings resolve(const Overrides& o) {
    Settings s;
    if (o.config) {
        apply_config(read_json(*o.config), s);
    }
    if (o.benchmark) {
        s.benchmark = *o.benchmark;
    }
    if (o.suite) {
        s.suite = *o.suite;
    }
    if (o.data) {
        s.data = *o.data;
    }
    if (o.seeds) {
        s.seeds = parse_seed_list(*o.seeds);
    }
    if (o.seed) {
        s.seeds = {*o.seed};
    }
    if (o.backend) {
        s.backend.kind = *o.backend;
    }
    if (o.endpoint) {
        s.backend.endpoint = *o.endpoint;
    }
    if (o.model) {
        s.engine.model = *o.model;
    }
    if (o.replay_file) {
        s.backend.replay_file = *o.replay_file;
    }
    if (o.replay_dir) {
        s.backend.replay_dir = *o.replay_dir;
    }
    if (o.lambda) {
        s.engine.score.lambda = *o.lambda;
    }
    if (o.iterations) {
        s.engine.max_iterations = *o.iterations;
        s.engine.schedule.total_iterations = *o.iterations;
    }
    if (o.ns) {
        s.engine.seed_calls = *o.ns;
    }
    if (o.topk) {
        s.engine.top_k = *o.topk;
    }
    if (o.mode) {
        try {
            s.engine.mode = engine::mode_from_string(*o.mode);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (o.jobs) {
        s.jobs = *o.jobs;
    }
    if (o.out) {
        s.out = *o.out;
    }
    if (o.extensions) {
        s.extensions = *o.extensions;
    }
    validate(s);
    return s;
}

} // namespace

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"In-context symbolic regression: propose skeletons, fit, score, refine."};
    app.require_subcommand(1);
    Overrides o;

    auto* run = app.add_subcommand("run", "One engine run on a benchmark or a CSV dataset");
    add_common(run, o);
    run->add_option("--data", o.data, "CSV with columns x1[,x2],y");
    run->add_option("--seed", o.seed, "Method seed");

    auto* bench_cmd = app.add_subcommand("bench", "Equations x seeds grid with summary tables");
    add_common(bench_cmd, o);
    bench_cmd->add_option("--seeds", o.seeds, "Seeds, e.g. 1-5 or 1,3,7");
    bench_cmd->add_option("--seed", o.seed, "Single seed");
    bench_cmd->add_option("--jobs", o.jobs, "Concurrent runs");

    std::string candidates;
    bool oracle = false;
    auto* ood = app.add_subcommand("ood", "Out-of-domain R2 curves for stored candidates");
    add_common(ood, o);
    ood->add_option("--candidates", candidates, "cells.json written by bench");
    ood->add_flag("--oracle", oracle, "Evaluate the ground-truth expressions");
    ood->add_option("--extensions", o.extensions, "Extension levels")->delimiter(',');

    std::vector<std::string> inputs;
    auto* report = app.add_subcommand("report", "Aggregate bench outputs into summary tables");
    add_common(report, o);
    report->add_option("inputs", inputs, "Bench output directories or runs.csv files");

    auto* oracle_cmd =
        app.add_subcommand("oracle", "Write replay scripts proposing each ground-truth skeleton");
    add_common(oracle_cmd, o);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_ok : exit_config;
    }

    try {
        Settings s = resolve(o);
        if (run->parsed()) {
            return cmd_run(s, out);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(s, out);
        }
        if (ood->parsed()) {
            return cmd_ood(s, candidates, oracle, out);
        }
        if (report->parsed()) {
            return cmd_report(s, inputs, out);
        }
        return cmd_oracle(s, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

} // namespace icsr::cli
