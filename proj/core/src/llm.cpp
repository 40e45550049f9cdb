// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "icsr/llm.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <thread>

namespace icsr::llm {

void SamplingParams::validate() const {
    if (!(temperature >= 0.0)) {
        throw std::invalid_argument("temperature must be >= 0");
    }
    if (!(top_p > 0.0 && top_p <= 1.0)) {
        throw std::invalid_argument("top_p must be in (0, 1]");
    }
    if (top_k < 1) {
        throw std::invalid_argument("top_k must be >= 1");
    }
    if (num_beams < 1) {
        throw std::invalid_argument("num_beams must be >= 1");
    }
    if (max_new_tokens < 1) {
        throw std::invalid_argument("max_new_tokens must be >= 1");
    }
}

void TemperatureSchedule::validate() const {
    if (!(start >= 0.0)) {
        throw std::invalid_argument("temperature start must be >= 0");
    }
    if (mode == Mode::LinearDecay && !(start >= end && end >= 0.0)) {
        throw std::invalid_argument("decay schedule needs start >= end >= 0");
    }
}

double temperature_at(const TemperatureSchedule& schedule, int iteration) {
    if (schedule.mode == TemperatureSchedule::Mode::Constant || schedule.total_iterations <= 1) {
        return schedule.start;
    }
    const double t = static_cast<double>(iteration) / (schedule.total_iterations - 1);
    return schedule.start + (schedule.end - schedule.start) * t;
}

// ---------------------------------------------------------------------------
// Replay

ReplayBackend::ReplayBackend(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

std::unique_ptr<ReplayBackend> ReplayBackend::from_json(const nlohmann::json& script) {
    if (!script.is_array()) {
        throw ConfigError("replay script must be a JSON array of strings");
    }
    std::vector<std::string> responses;
    for (const auto& item : script) {
        if (!item.is_string()) {
            throw ConfigError("replay script entries must be strings");
        }
        responses.push_back(item.get<std::string>());
    }
    return std::make_unique<ReplayBackend>(std::move(responses));
}

std::unique_ptr<ReplayBackend> ReplayBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open replay file " + path.string());
    }
    nlohmann::json script;
    try {
        in >> script;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("replay file " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(script);
}

CompletionResponse ReplayBackend::complete(const CompletionRequest& request) {
    if (request.messages.empty()) {
        throw std::invalid_argument("completion request has no messages");
    }
    std::lock_guard lock(mutex_);
    if (next_ >= responses_.size()) {
        throw ReplayExhausted("replay script exhausted after " + std::to_string(next_) +
                              " responses");
    }
    CompletionResponse r;
    r.text = responses_[next_++];
    return r;
}

std::size_t ReplayBackend::consumed() const {
    std::lock_guard lock(mutex_);
    return next_;
}

std::size_t ReplayBackend::remaining() const {
    std::lock_guard lock(mutex_);
    return responses_.size() - next_;
}

// ---------------------------------------------------------------------------
// Wire format

nlohmann::json to_json(const SamplingParams& p) {
    return {{"temperature", p.temperature},
            {"top_p", p.top_p},
            {"top_k", p.top_k},
            {"num_beams", p.num_beams},
            {"max_new_tokens", p.max_new_tokens}};
}

nlohmann::json to_json(const CompletionRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    return {{"model", request.model},
            {"messages", std::move(messages)},
            {"sampling", to_json(request.sampling)}};
}

nlohmann::json to_wire(const CompletionRequest& request, bool extended_sampling) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    nlohmann::json body = {{"model", request.model},
                           {"messages", std::move(messages)},
                           {"temperature", request.sampling.temperature},
                           {"top_p", request.sampling.top_p},
                           {"max_tokens", request.sampling.max_new_tokens}};
    if (extended_sampling) {
        body["top_k"] = request.sampling.top_k;
        body["num_beams"] = request.sampling.num_beams;
    }
    return body;
}

CompletionResponse from_wire(const nlohmann::json& body) {
    const auto* choices = body.is_object() && body.contains("choices") ? &body["choices"] : nullptr;
    if (choices == nullptr || !choices->is_array() || choices->empty()) {
        throw BackendError("response has no choices");
    }
    const auto& first = (*choices)[0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) {
        throw BackendError("response choice has no message");
    }
    const auto& message = first["message"];
    CompletionResponse r;
    if (message.contains("content") && message["content"].is_string()) {
        r.text = message["content"].get<std::string>();
    } else if (!message.contains("content") || !message["content"].is_null()) {
        throw BackendError("response message has no string content");
    }
    if (body.contains("usage") && body["usage"].is_object()) {
        const auto& u = body["usage"];
        r.usage.prompt_tokens = u.value("prompt_tokens", 0L);
        r.usage.completion_tokens = u.value("completion_tokens", 0L);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Live

LiveBackend::LiveBackend(LiveOptions options)
    : options_(std::move(options)),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    const std::string& url = options_.endpoint;
    auto scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw ConfigError("endpoint must include a scheme: " + url);
    }
    auto slash = url.find('/', scheme + 3);
    host_ = slash == std::string::npos ? url : url.substr(0, slash);
    path_prefix_ = slash == std::string::npos ? "" : url.substr(slash);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
        path_prefix_.pop_back();
    }
    if (options_.retry.attempts < 1) {
        throw ConfigError("retry attempts must be >= 1");
    }
}

std::unique_ptr<LiveBackend> LiveBackend::from_environment(std::string endpoint) {
    const char* key = std::getenv("ICSR_API_KEY");
    if (key == nullptr || *key == '\0') {
        throw ConfigError("ICSR_API_KEY is not set");
    }
    if (endpoint.empty()) {
        throw ConfigError("live backend needs an endpoint");
    }
    LiveOptions options;
    options.endpoint = std::move(endpoint);
    options.api_key = key;
    return std::make_unique<LiveBackend>(std::move(options));
}

void LiveBackend::set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) {
    sleep_ = std::move(sleeper);
}

CompletionResponse LiveBackend::complete(const CompletionRequest& request) {
    if (request.messages.empty()) {
        throw std::invalid_argument("completion request has no messages");
    }
    std::lock_guard lock(mutex_);
    const std::string body = to_wire(request, options_.extended_sampling).dump();
    const std::string path = path_prefix_ + "/chat/completions";

    httplib::Client client(host_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    httplib::Headers headers;
    if (!options_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + options_.api_key);
    }

    std::string last_error;
    auto backoff = options_.retry.initial_backoff;
    for (int attempt = 0; attempt < options_.retry.attempts; ++attempt) {
        if (attempt > 0) {
            sleep_(backoff);
            backoff *= 2;
        }
        const auto started = std::chrono::steady_clock::now();
        auto res = client.Post(path, headers, body, "application/json");
        const auto elapsed = std::chrono::steady_clock::now() - started;
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw BackendError("HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) {
            throw BackendError("response body is not JSON");
        }
        CompletionResponse r = from_wire(parsed);
        r.latency_seconds = std::chrono::duration<double>(elapsed).count();
        return r;
    }
    throw BackendError("giving up after " + std::to_string(options_.retry.attempts) +
                       " attempts: " + last_error);
}

} // namespace icsr::llm
