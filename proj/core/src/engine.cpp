// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "icsr/engine.hpp"

#include "icsr/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <set>

namespace icsr::engine {

std::string to_string(Mode mode) {
    switch (mode) {
    case Mode::Full: return "full";
    case Mode::SeedOnly: return "seed-only";
    case Mode::RandomGuessing: return "random";
    }
    return "full";
}

Mode mode_from_string(const std::string& name) {
    if (name == "full") {
        return Mode::Full;
    }
    if (name == "seed-only") {
        return Mode::SeedOnly;
    }
    if (name == "random") {
        return Mode::RandomGuessing;
    }
    throw std::invalid_argument("unknown mode '" + name + "' (expected full, seed-only, random)");
}

std::string to_string(Phase phase) {
    switch (phase) {
    case Phase::Seed: return "seed";
    case Phase::Loop: return "loop";
    case Phase::Random: return "random";
    }
    return "seed";
}

std::string to_string(CandidateStatus status) {
    switch (status) {
    case CandidateStatus::Accepted: return "accepted";
    case CandidateStatus::ParseError: return "parse_error";
    case CandidateStatus::OverLimit: return "over_limit";
    case CandidateStatus::Duplicate: return "duplicate";
    case CandidateStatus::InvalidFit: return "invalid_fit";
    }
    return "accepted";
}

void EngineConfig::validate() const {
    if (seed_calls < 1) {
        throw std::invalid_argument("seed_calls must be >= 1");
    }
    if (max_iterations < 0) {
        throw std::invalid_argument("max_iterations must be >= 0");
    }
    if (top_k < 1) {
        throw std::invalid_argument("top_k must be >= 1");
    }
    if (functions_per_call < 1) {
        throw std::invalid_argument("functions_per_call must be >= 1");
    }
    score.validate();
    fit.validate();
    sampling.validate();
    schedule.validate();
}

int EngineConfig::call_budget() const {
    return mode == Mode::SeedOnly ? seed_calls : seed_calls + max_iterations;
}

// ---------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(std::size_t k) : k_(k) {
    if (k == 0) {
        throw std::invalid_argument("trajectory capacity must be >= 1");
    }
}

bool Trajectory::offer(const Candidate& candidate) {
    const double err = candidate.scores.err;
    if (!std::isfinite(err)) {
        return false;
    }
    auto same = std::find_if(entries_.begin(), entries_.end(), [&](const Candidate& c) {
        return c.skeleton.key == candidate.skeleton.key;
    });
    if (same != entries_.end()) {
        if (!(err < same->scores.err)) {
            return false;
        }
        entries_.erase(same);
    }
    if (entries_.size() >= k_ && !(err < entries_.back().scores.err)) {
        return false;
    }
    auto pos = std::upper_bound(entries_.begin(), entries_.end(), err,
                                [](double e, const Candidate& c) { return e < c.scores.err; });
    entries_.insert(pos, candidate);
    if (entries_.size() > k_) {
        entries_.pop_back();
    }
    return true;
}

double Trajectory::best_err() const noexcept {
    return entries_.empty() ? std::numeric_limits<double>::infinity()
                            : entries_.front().scores.err;
}

// ---------------------------------------------------------------------------

std::uint64_t fit_seed(std::uint64_t master, const std::string& key) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : key) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL + h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

class Session {
public:
    Session(const Dataset& data, const EngineConfig& config, llm::Backend& backend,
            const EventSink& sink)
        : data_(data), config_(config), backend_(backend), sink_(sink),
          trajectory_(static_cast<std::size_t>(config.top_k)) {
        config_.validate();
        if (data_.empty()) {
            throw std::invalid_argument("dataset is empty");
        }
        record_.config = config_;
        record_.data = data_.provenance;
        record_.budget.max_calls = config_.call_budget();
    }

    // Issues one call and processes its candidates.
    void call(Phase phase, int index, const std::string& prompt_text, double temperature) {
        CallLog log;
        log.phase = phase;
        log.call = index;
        log.temperature = temperature;
        log.prompt = prompt_text;

        llm::CompletionRequest request;
        request.model = config_.model;
        request.sampling = config_.sampling;
        request.sampling.temperature = temperature;
        request.messages.push_back({"user", prompt_text});

        emit({{"event", "request"},
              {"phase", to_string(phase)},
              {"call", index},
              {"request", llm::to_json(request)}});
        ++record_.budget.calls;
        try {
            llm::CompletionResponse response = backend_.complete(request);
            log.response = response.text;
            emit({{"event", "response"},
                  {"phase", to_string(phase)},
                  {"call", index},
                  {"text", response.text},
                  {"latency_seconds", response.latency_seconds},
                  {"usage",
                   {{"prompt_tokens", response.usage.prompt_tokens},
                    {"completion_tokens", response.usage.completion_tokens}}}});
            process(log, Origin{phase, index});
        } catch (const std::exception& e) {
            log.ok = false;
            log.error = e.what();
            emit({{"event", "error"},
                  {"phase", to_string(phase)},
                  {"call", index},
                  {"message", e.what()}});
        }
        record_.best_err_history.push_back(trajectory_.best_err());
        emit({{"event", "call"}, {"log", to_json(log)}});
        record_.calls.push_back(std::move(log));
    }

    bool reached_target() const {
        return record_.best && record_.best->scores.r2_train > config_.early_stop_r2;
    }

    const Trajectory& trajectory() const { return trajectory_; }
    RunRecord& record() { return record_; }
    const Dataset& data() const { return data_; }
    const EngineConfig& config() const { return config_; }

private:
    struct Pending {
        std::size_t log_index;
        expr::Expression parsed;
        expr::Skeleton skeleton;
        std::size_t complexity;
        fit::FitResult fit;
    };

    void emit(const nlohmann::json& event) const {
        if (sink_) {
            sink_(event);
        }
    }

    void process(CallLog& log, Origin origin) {
        prompt::ParsedCandidates parsed = prompt::extract_candidates(log.response);
        prompt::parse_candidates(parsed, data_.dim);

        std::vector<Pending> pending;
        int accepted = 0;
        for (std::size_t i = 0; i < parsed.raw.size(); ++i) {
            CandidateLog entry;
            entry.raw = parsed.raw[i];
            const auto& outcome = parsed.outcomes[i];
            if (!outcome.expression) {
                entry.status = CandidateStatus::ParseError;
                entry.message = outcome.error;
            } else if (accepted >= config_.functions_per_call) {
                entry.status = CandidateStatus::OverLimit;
            } else {
                ++accepted;
                ++record_.budget.candidates_parsed;
                expr::Skeleton skeleton = expr::canonicalize(*outcome.expression);
                entry.key = skeleton.key;
                entry.complexity = expr::complexity(*outcome.expression);
                if (!seen_.insert(skeleton.key).second) {
                    entry.status = CandidateStatus::Duplicate;
                } else {
                    pending.push_back(
                        {log.candidates.size(), *outcome.expression, std::move(skeleton),
                         entry.complexity, {}});
                }
            }
            log.candidates.push_back(std::move(entry));
        }

        fit_all(pending);

        for (auto& p : pending) {
            CandidateLog& entry = log.candidates[p.log_index];
            if (!p.fit.valid) {
                entry.status = CandidateStatus::InvalidFit;
                entry.message = "undefined on training data for every restart";
                continue;
            }
            std::vector<double> predictions = predict(p.skeleton, p.fit.coefficients);
            score::Scores scores =
                score::score_candidate(predictions, data_.y, p.complexity, config_.score);
            if (!std::isfinite(scores.err)) {
                entry.status = CandidateStatus::InvalidFit;
                entry.message = "non-finite error";
                continue;
            }
            entry.status = CandidateStatus::Accepted;
            entry.coefficients = p.fit.coefficients;
            entry.scores = scores;

            Candidate candidate{entry.raw, std::move(p.parsed), std::move(p.skeleton),
                                std::move(p.fit), scores, origin};
            trajectory_.offer(candidate);
            if (!record_.best || candidate.scores.err < record_.best->scores.err) {
                record_.best = std::move(candidate);
            }
        }
    }

    void fit_all(std::vector<Pending>& pending) {
        record_.budget.unique_fits += static_cast<int>(pending.size());
        record_.budget.nls_restarts +=
            static_cast<int>(pending.size()) * (config_.fit.restarts);
        auto one = [this](const expr::Skeleton& skeleton) {
            fit::Rng rng(fit_seed(config_.seed, skeleton.key));
            return fit::fit(skeleton, data_, config_.fit, rng);
        };
        if (config_.parallel_fits && pending.size() > 1) {
            std::vector<std::future<fit::FitResult>> futures;
            futures.reserve(pending.size());
            for (const auto& p : pending) {
                futures.push_back(std::async(std::launch::async, one, std::cref(p.skeleton)));
            }
            for (std::size_t i = 0; i < pending.size(); ++i) {
                pending[i].fit = futures[i].get();
            }
        } else {
            for (auto& p : pending) {
                p.fit = one(p.skeleton);
            }
        }
    }

    std::vector<double> predict(const expr::Skeleton& skeleton,
                                const std::vector<double>& coefficients) const {
        const expr::Program program(skeleton.expression);
        std::vector<double> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) {
            out[i] = program(coefficients, data_.point(i));
        }
        return out;
    }

    const Dataset& data_;
    EngineConfig config_;
    llm::Backend& backend_;
    const EventSink& sink_;
    Trajectory trajectory_;
    std::set<std::string> seen_;
    RunRecord record_;
};

std::vector<prompt::TrajectoryEntry> trajectory_view(const Trajectory& trajectory) {
    std::vector<prompt::TrajectoryEntry> view;
    for (const auto& c : trajectory.entries()) {
        view.push_back({expr::render(c.parsed), c.scores.err});
    }
    return view;
}

} // namespace

RunRecord run(const Dataset& data, const EngineConfig& config, llm::Backend& backend,
              const EventSink& sink) {
    if (config.mode == Mode::RandomGuessing) {
        return run_random_guessing(data, config, backend, sink);
    }
    Session session(data, config, backend, sink);
    prompt::PromptContext ctx = prompt::make_context(data);

    for (int i = 0; i < config.seed_calls && !session.reached_target(); ++i) {
        session.call(Phase::Seed, i, prompt::build_seed_prompt(ctx), config.sampling.temperature);
    }
    if (!session.record().best) {
        throw NoValidSeedError("no valid seed function after " +
                                   std::to_string(config.seed_calls) + " seed calls",
                               std::move(session.record()));
    }

    if (config.mode == Mode::Full) {
        llm::TemperatureSchedule schedule = config.schedule;
        schedule.total_iterations = config.max_iterations;
        for (int j = 0; j < config.max_iterations && !session.reached_target(); ++j) {
            ctx.trajectory = trajectory_view(session.trajectory());
            ctx.iteration = j;
            session.call(Phase::Loop, j, prompt::build_loop_prompt(ctx),
                         llm::temperature_at(schedule, j));
        }
    }
    session.record().early_stopped = session.reached_target();
    return std::move(session.record());
}

RunRecord run_random_guessing(const Dataset& data, const EngineConfig& config,
                              llm::Backend& backend, const EventSink& sink) {
    EngineConfig cfg = config;
    cfg.mode = Mode::RandomGuessing;
    Session session(data, cfg, backend, sink);
    const std::string text = prompt::build_random_prompt(data.dim);
    for (int i = 0; i < cfg.call_budget(); ++i) {
        session.call(Phase::Random, i, text, cfg.sampling.temperature);
    }
    if (!session.record().best) {
        throw NoValidSeedError("no valid function after " + std::to_string(cfg.call_budget()) +
                                   " random-guessing calls",
                               std::move(session.record()));
    }
    session.record().early_stopped = false;
    return std::move(session.record());
}

RunRecord run_mode(const Dataset& data, const EngineConfig& config, llm::Backend& backend,
                   const EventSink& sink) {
    return run(data, config, backend, sink);
}

Budget budget_report(const RunRecord& record) {
    const Budget& b = record.budget;
    if (b.calls > record.config.seed_calls + record.config.max_iterations ||
        b.calls > b.max_calls) {
        throw std::logic_error("run issued " + std::to_string(b.calls) +
                               " calls, over its budget of " + std::to_string(b.max_calls));
    }
    if (b.nls_restarts != b.unique_fits * record.config.fit.restarts) {
        throw std::logic_error("restart count does not match unique fits");
    }
    return b;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const EngineConfig& c) {
    return {
        {"mode", to_string(c.mode)},
        {"seed_calls", c.seed_calls},
        {"max_iterations", c.max_iterations},
        {"top_k", c.top_k},
        {"functions_per_call", c.functions_per_call},
        {"early_stop_r2", c.early_stop_r2},
        {"seed", c.seed},
        {"model", c.model},
        {"score",
         {{"lambda", c.score.lambda},
          {"max_length", c.score.max_length},
          {"epsilon", c.score.epsilon},
          {"trim_fraction", c.score.trim_fraction}}},
        {"fit",
         {{"restarts", c.fit.restarts},
          {"max_iterations", c.fit.max_iterations},
          {"warm_start", c.fit.warm_start},
          {"gradient_tolerance", c.fit.gradient_tolerance},
          {"step_tolerance", c.fit.step_tolerance},
          {"residual_tolerance", c.fit.residual_tolerance},
          {"undefined_penalty", c.fit.undefined_penalty},
          {"init_draws", c.fit.init_draws}}},
        {"sampling", llm::to_json(c.sampling)},
        {"schedule",
         {{"mode", c.schedule.mode == llm::TemperatureSchedule::Mode::Constant ? "constant"
                                                                                : "linear-decay"},
          {"start", c.schedule.start},
          {"end", c.schedule.end}}},
    };
}

namespace {

nlohmann::json scores_json(const score::Scores& s) {
    return {{"nmse", s.nmse},
            {"fitness", s.r},
            {"err", s.err},
            {"r2_train", s.r2_train},
            {"complexity", s.complexity}};
}

} // namespace

nlohmann::json to_json(const Candidate& c) {
    return {{"raw", c.raw},
            {"expression", expr::render(c.parsed)},
            {"skeleton", c.skeleton.key},
            {"coefficients", c.fit.coefficients},
            {"fitted", expr::render(c.skeleton.expression, c.fit.coefficients)},
            {"sse", c.fit.sse},
            {"best_restart", c.fit.best_restart},
            {"converged", c.fit.converged},
            {"scores", scores_json(c.scores)},
            {"origin", {{"phase", to_string(c.origin.phase)}, {"call", c.origin.call}}}};
}

nlohmann::json to_json(const CallLog& call) {
    nlohmann::json candidates = nlohmann::json::array();
    for (const auto& c : call.candidates) {
        nlohmann::json j = {{"raw", c.raw}, {"status", to_string(c.status)}};
        if (!c.message.empty()) {
            j["message"] = c.message;
        }
        if (!c.key.empty()) {
            j["skeleton"] = c.key;
            j["complexity"] = c.complexity;
        }
        if (c.scores) {
            j["coefficients"] = c.coefficients;
            j["scores"] = scores_json(*c.scores);
        }
        candidates.push_back(std::move(j));
    }
    nlohmann::json j = {{"phase", to_string(call.phase)},
                        {"call", call.call},
                        {"temperature", call.temperature},
                        {"prompt", call.prompt},
                        {"response", call.response},
                        {"ok", call.ok},
                        {"candidates", std::move(candidates)}};
    if (!call.ok) {
        j["error"] = call.error;
    }
    return j;
}

nlohmann::json to_json(const Budget& b) {
    return {{"calls", b.calls},
            {"max_calls", b.max_calls},
            {"candidates_parsed", b.candidates_parsed},
            {"unique_fits", b.unique_fits},
            {"nls_restarts", b.nls_restarts}};
}

nlohmann::json summary_json(const RunRecord& record) {
    nlohmann::json j = {{"config", to_json(record.config)},
                        {"data",
                         {{"benchmark", record.data.benchmark},
                          {"split", record.data.split},
                          {"seed", record.data.seed}}},
                        {"budget", to_json(record.budget)},
                        {"early_stopped", record.early_stopped},
                        {"best_err_history", record.best_err_history}};
    j["best"] = record.best ? to_json(*record.best) : nlohmann::json(nullptr);
    return j;
}

} // namespace icsr::engine
