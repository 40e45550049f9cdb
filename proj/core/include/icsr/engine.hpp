// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "icsr/dataset.hpp"
#include "icsr/expr.hpp"
#include "icsr/fit.hpp"
#include "icsr/llm.hpp"
#include "icsr/score.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace icsr::engine {

enum class Mode { Full, SeedOnly, RandomGuessing };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct EngineConfig {
    int seed_calls{10};
    int max_iterations{50};
    int top_k{5};
    int functions_per_call{5};
    double early_stop_r2{0.99999};
    score::ScoreConfig score;
    fit::FitConfig fit;
    llm::SamplingParams sampling;
    llm::TemperatureSchedule schedule;
    std::string model{"default"};
    std::uint64_t seed{1};
    Mode mode{Mode::Full};
    // Fit distinct skeletons of one response concurrently.
    bool parallel_fits{true};

    void validate() const;
    // Calls a run may issue: seed_calls + max_iterations (loop calls are
    // skipped in seed-only mode).
    int call_budget() const;
};

enum class Phase { Seed, Loop, Random };
std::string to_string(Phase phase);

struct Origin {
    Phase phase{Phase::Seed};
    // Index of the call within its phase.
    int call{0};
};

struct Candidate {
    std::string raw;
    expr::Expression parsed;
    expr::Skeleton skeleton;
    fit::FitResult fit;
    score::Scores scores;
    Origin origin;
};

// Up to k best candidates by ascending err, one per canonical key.
class Trajectory {
public:
    explicit Trajectory(std::size_t k);

    // Returns true if the candidate entered the trajectory.
    bool offer(const Candidate& candidate);
    const std::vector<Candidate>& entries() const noexcept { return entries_; }
    std::size_t capacity() const noexcept { return k_; }
    bool empty() const noexcept { return entries_.empty(); }
    // +inf when empty.
    double best_err() const noexcept;

private:
    std::size_t k_;
    std::vector<Candidate> entries_;
};

enum class CandidateStatus { Accepted, ParseError, OverLimit, Duplicate, InvalidFit };
std::string to_string(CandidateStatus status);

struct CandidateLog {
    std::string raw;
    CandidateStatus status{CandidateStatus::Accepted};
    std::string message;
    std::string key;
    std::size_t complexity{0};
    std::vector<double> coefficients;
    std::optional<score::Scores> scores;
};

struct CallLog {
    Phase phase{Phase::Seed};
    int call{0};
    double temperature{0.0};
    std::string prompt;
    std::string response;
    bool ok{true};
    std::string error;
    std::vector<CandidateLog> candidates;
};

struct Budget {
    int calls{0};
    int candidates_parsed{0};
    int unique_fits{0};
    int nls_restarts{0};
    int max_calls{0};
};

struct RunRecord {
    EngineConfig config;
    Provenance data;
    std::vector<CallLog> calls;
    std::optional<Candidate> best;
    Budget budget;
    bool early_stopped{false};
    // Best err in the trajectory after each call.
    std::vector<double> best_err_history;
};

class NoValidSeedError : public std::runtime_error {
public:
    NoValidSeedError(std::string message, RunRecord record)
        : std::runtime_error(std::move(message)), record_(std::move(record)) {}
    const RunRecord& record() const noexcept { return record_; }

private:
    RunRecord record_;
};

// Receives one JSON event per request (before the backend is called), per
// response (before it is parsed) and per processed call.
using EventSink = std::function<void(const nlohmann::json&)>;

// Seed phase followed by the refinement loop. Throws NoValidSeedError if the
// seed phase yields no valid candidate.
RunRecord run(const Dataset& data, const EngineConfig& config, llm::Backend& backend,
              const EventSink& sink = {});

// Calls the random prompt call_budget() times with no feedback.
RunRecord run_random_guessing(const Dataset& data, const EngineConfig& config,
                              llm::Backend& backend, const EventSink& sink = {});

// Dispatches on config.mode.
RunRecord run_mode(const Dataset& data, const EngineConfig& config, llm::Backend& backend,
                   const EventSink& sink = {});

// Throws std::logic_error if the record exceeds its configured call budget.
Budget budget_report(const RunRecord& record);

// Seed for the fit of one skeleton: stable across runs and platforms.
std::uint64_t fit_seed(std::uint64_t master, const std::string& key);

nlohmann::json to_json(const EngineConfig& config);
nlohmann::json to_json(const Candidate& candidate);
nlohmann::json to_json(const CallLog& call);
nlohmann::json to_json(const Budget& budget);
// Summary without per-call logs.
nlohmann::json summary_json(const RunRecord& record);

} // namespace icsr::engine
