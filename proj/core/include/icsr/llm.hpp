// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace icsr::llm {

struct SamplingParams {
    double temperature{1.0};
    double top_p{0.9};
    int top_k{60};
    int num_beams{1};
    int max_new_tokens{512};

    void validate() const;
};

struct TemperatureSchedule {
    enum class Mode { Constant, LinearDecay };
    Mode mode{Mode::Constant};
    double start{1.0};
    double end{0.4};
    int total_iterations{50};

    void validate() const;
};

// Constant mode returns `start`; linear decay interpolates from start at
// iteration 0 to end at iteration total-1.
double temperature_at(const TemperatureSchedule& schedule, int iteration);

struct Message {
    std::string role;
    std::string content;
};

struct CompletionRequest {
    std::string model;
    std::vector<Message> messages;
    SamplingParams sampling;
};

struct Usage {
    long prompt_tokens{0};
    long completion_tokens{0};
};

struct CompletionResponse {
    std::string text;
    Usage usage;
    double latency_seconds{0.0};
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ReplayExhausted : public BackendError {
public:
    using BackendError::BackendError;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
};

// Returns scripted responses in order; throws ReplayExhausted once empty.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::vector<std::string> responses);

    // JSON array of strings.
    static std::unique_ptr<ReplayBackend> from_file(const std::filesystem::path& path);
    static std::unique_ptr<ReplayBackend> from_json(const nlohmann::json& script);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string name() const override { return "replay"; }
    std::size_t consumed() const;
    std::size_t remaining() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::string> responses_;
    std::size_t next_{0};
};

struct RetryPolicy {
    int attempts{3};
    std::chrono::milliseconds initial_backoff{1000};
};

struct LiveOptions {
    // Base URL, e.g. "http://localhost:8000/v1"; requests go to <endpoint>/chat/completions.
    std::string endpoint;
    std::string api_key;
    RetryPolicy retry;
    std::chrono::seconds timeout{120};
    // Also send top_k and num_beams, for servers that accept extra sampling fields.
    bool extended_sampling{false};
};

// Chat-completion client over HTTP(S).
class LiveBackend final : public Backend {
public:
    explicit LiveBackend(LiveOptions options);

    // Reads the credential from ICSR_API_KEY; throws ConfigError if unset.
    static std::unique_ptr<LiveBackend> from_environment(std::string endpoint);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string name() const override { return "live"; }

    // Injectable for tests; defaults to std::this_thread::sleep_for.
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper);

private:
    LiveOptions options_;
    std::string host_;
    std::string path_prefix_;
    std::mutex mutex_;
    std::function<void(std::chrono::milliseconds)> sleep_;
};

nlohmann::json to_wire(const CompletionRequest& request, bool extended_sampling);
// Reads choices[0].message.content and usage; throws BackendError on a malformed envelope.
CompletionResponse from_wire(const nlohmann::json& body);

nlohmann::json to_json(const SamplingParams& params);
nlohmann::json to_json(const CompletionRequest& request);

} // namespace icsr::llm
