// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "icsr/bench.hpp"
#include "icsr/dataset.hpp"
#include "icsr/engine.hpp"
#include "icsr/llm.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace icsr::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 1,
    exit_no_valid_seed = 2,
    exit_failure = 3,
};

struct BackendSettings {
    // "live" or "replay".
    std::string kind{"replay"};
    std::string endpoint{"https://api.openai.com/v1"};
    std::string replay_file;
    // Holds <equation>-seed<k>.json or <equation>.json scripts.
    std::string replay_dir;
    int timeout_seconds{120};
    int retries{3};
    int initial_backoff_ms{1000};
    bool extended_sampling{false};
};

struct Settings {
    engine::EngineConfig engine;
    BackendSettings backend;
    std::string benchmark;
    std::string suite;
    std::string data;
    std::string out{"icsr-out"};
    std::vector<int> seeds{1, 2, 3, 4, 5};
    int jobs{1};
    std::vector<double> extensions{0.0, 0.25, 0.5, 0.75, 1.0};
};

// Overlays a config document onto `settings`. Unknown keys and ill-typed
// values throw llm::ConfigError naming the offending key.
void apply_config(const nlohmann::json& document, Settings& settings);
nlohmann::json to_json(const Settings& settings);

// "1,2,5" or "1-5" (ranges may be mixed with lists).
std::vector<int> parse_seed_list(const std::string& text);

// Columns x1[,x2],y with an optional header row; dimensionality is the
// column count minus one.
Dataset read_csv_dataset(const std::filesystem::path& path);

// Reads a runs table written by `bench`.
std::vector<bench::RunCell> read_runs_csv(const std::filesystem::path& path);

std::unique_ptr<llm::Backend> make_backend(const BackendSettings& settings,
                                           const std::string& equation, int seed);

// Serializes every write into one output directory. Whole files are written
// to a temporary name and renamed into place; logs are line-appended.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    void write_file(const std::string& name, const std::string& content);
    // Truncates the log the first time it is touched.
    void append_line(const std::string& name, const std::string& line);
    void close_log(const std::string& name);

private:
    std::filesystem::path root_;
    std::mutex mutex_;
    std::map<std::string, std::unique_ptr<std::ofstream>> logs_;
};

// Entry point shared by the executable and the tests; args exclude argv[0].
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace icsr::cli
