// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

namespace icsr::cli {
namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome icsr(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    int code = main_entry(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json read_json(const std::filesystem::path& p) {
    return nlohmann::json::parse(testing::slurp(p));
}

// Unsets ICSR_API_KEY for the lifetime of the guard.
class NoApiKey {
public:
    NoApiKey() {
        if (const char* v = std::getenv("ICSR_API_KEY")) {
            saved_ = v;
        }
        ::unsetenv("ICSR_API_KEY");
    }
    ~NoApiKey() {
        if (saved_) {
            ::setenv("ICSR_API_KEY", saved_->c_str(), 1);
        }
    }

private:
    std::optional<std::string> saved_;
};

TEST(Config, UnknownKeyRejected) {
    Settings s;
    EXPECT_THROW(apply_config(nlohmann::json{{"engine", {{"topk", 3}}}}, s), llm::ConfigError);
    EXPECT_THROW(apply_config(nlohmann::json{{"colour", "red"}}, s), llm::ConfigError);
    EXPECT_THROW(apply_config(nlohmann::json{{"engine", {{"top_k", "five"}}}}, s),
                 llm::ConfigError);
    try {
        apply_config(nlohmann::json{{"score", {{"lambada", 0.1}}}}, s);
    } catch (const llm::ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("lambada"), std::string::npos);
    }
}

TEST(Config, AppliesKnownKeys) {
    Settings s;
    apply_config(nlohmann::json{{"engine", {{"top_k", 3}, {"mode", "seed-only"}}},
                                {"score", {{"lambda", 0.0}}},
                                {"fit", {{"restarts", 2}, {"init_draws", 4}}},
                                {"seeds", {1, 3}},
                                {"jobs", 2}},
                 s);
    EXPECT_EQ(s.engine.top_k, 3);
    EXPECT_EQ(s.engine.mode, engine::Mode::SeedOnly);
    EXPECT_EQ(s.engine.score.lambda, 0.0);
    EXPECT_EQ(s.engine.fit.restarts, 2);
    EXPECT_EQ(s.engine.fit.init_draws, 4);
    EXPECT_EQ(s.seeds, (std::vector<int>{1, 3}));
    EXPECT_EQ(s.jobs, 2);

    // Serialized settings load back to the same document.
    Settings t;
    apply_config(to_json(s), t);
    EXPECT_EQ(to_json(t), to_json(s));
}

TEST(Seeds, ListParsing) {
    EXPECT_EQ(parse_seed_list("1-5"), (std::vector<int>{1, 2, 3, 4, 5}));
    EXPECT_EQ(parse_seed_list("1,3"), (std::vector<int>{1, 3}));
    EXPECT_EQ(parse_seed_list("2,5-7"), (std::vector<int>{2, 5, 6, 7}));
    EXPECT_THROW(parse_seed_list("5-1"), std::exception);
    EXPECT_THROW(parse_seed_list("a"), std::exception);
}

TEST(Csv, DatasetDimensionInferred) {
    testing::TempDir dir;
    testing::spit(dir / "one.csv", "x,y\n0,1\n1,3\n2,5\n");
    testing::spit(dir / "two.csv", "0.5,1,2\n1.5,2,4\n");
    Dataset one = read_csv_dataset(dir / "one.csv");
    EXPECT_EQ(one.dim, 1);
    EXPECT_EQ(one.size(), 3u);
    EXPECT_EQ(one.y[2], 5.0);
    Dataset two = read_csv_dataset(dir / "two.csv");
    EXPECT_EQ(two.dim, 2);
    EXPECT_EQ(two.point(1)[0], 1.5);
    testing::spit(dir / "ragged.csv", "1,2\n1,2,3\n");
    EXPECT_THROW(read_csv_dataset(dir / "ragged.csv"), std::exception);
}

class CliRun : public ::testing::Test {
protected:
    void SetUp() override {
        scripts_ = (dir_ / "scripts").string();
        ASSERT_EQ(icsr({"oracle", "--suite", "all", "--out", scripts_}).code, exit_ok);
    }
    testing::TempDir dir_;
    std::string scripts_;
};

TEST_F(CliRun, OracleReplayRun) {
    const std::string out = (dir_ / "run").string();
    Outcome o = icsr({"run", "--benchmark", "nguyen8", "--replay-dir", scripts_, "--out", out});
    ASSERT_EQ(o.code, exit_ok) << o.err;
    auto summary = read_json(dir_ / "run" / "summary.json");
    EXPECT_GT(summary["best"]["scores"]["r2_train"].get<double>(), 0.99999);
    EXPECT_TRUE(std::filesystem::exists(dir_ / "run" / "config.json"));
    EXPECT_TRUE(std::filesystem::exists(dir_ / "run" / "plot.csv"));
    std::string log = testing::slurp(dir_ / "run" / "run_log.jsonl");
    EXPECT_NE(log.find("\"request\""), std::string::npos);
}

TEST_F(CliRun, CsvDataRun) {
    testing::spit(dir_ / "d.csv", "x,y\n0,1\n1,3\n2,5\n3,7\n4,9\n");
    testing::spit(dir_ / "s.json", R"(["f1(x) = c*x + c"])");
    Outcome o = icsr({"run", "--data", (dir_ / "d.csv").string(), "--replay-file",
                      (dir_ / "s.json").string(), "--out", (dir_ / "csv").string()});
    ASSERT_EQ(o.code, exit_ok) << o.err;
    std::string plot = testing::slurp(dir_ / "csv" / "plot.csv");
    EXPECT_EQ(plot.substr(0, plot.find('\n')), "x,y_true,y_pred");
}

TEST_F(CliRun, LiveWithoutKeyIsConfigError) {
    NoApiKey guard;
    Outcome o = icsr({"run", "--benchmark", "nguyen1", "--backend", "live", "--out",
                      (dir_ / "live").string()});
    EXPECT_EQ(o.code, exit_config);
    EXPECT_NE(o.err.find("ICSR_API_KEY"), std::string::npos);
}

TEST_F(CliRun, NoValidSeedExitCode) {
    testing::spit(dir_ / "junk.json", R"(["nothing useful"])");
    Outcome o = icsr({"run", "--benchmark", "nguyen1", "--ns", "1", "--replay-file",
                      (dir_ / "junk.json").string(), "--out", (dir_ / "junk").string()});
    EXPECT_EQ(o.code, exit_no_valid_seed);
    auto summary = read_json(dir_ / "junk" / "summary.json");
    EXPECT_EQ(summary["status"], "no_valid_seed");
}

TEST_F(CliRun, UnknownBenchmarkIsConfigError) {
    EXPECT_EQ(icsr({"run", "--benchmark", "nguyen99", "--replay-dir", scripts_, "--out",
                    (dir_ / "x").string()})
                  .code,
              exit_config);
}

TEST_F(CliRun, BenchThenReport) {
    const std::string out = (dir_ / "bench").string();
    Outcome o = icsr({"bench", "--suite", "r", "--seeds", "1-2", "--jobs", "2", "--replay-dir",
                      scripts_, "--out", out});
    ASSERT_EQ(o.code, exit_ok) << o.err;
    for (const char* f : {"runs.csv", "summary.csv", "report.json", "cells.json", "config.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir_ / "bench" / f)) << f;
    }
    EXPECT_TRUE(std::filesystem::exists(dir_ / "bench" / "logs" / "R1-seed2.jsonl"));
    auto report = read_json(dir_ / "bench" / "report.json");
    EXPECT_TRUE(report.contains("complexity_convention"));
    const auto& r_suite = report["summaries"][0];
    EXPECT_EQ(r_suite["benchmark"], "r");
    EXPECT_NEAR(r_suite["complexity_delta"].get<double>(), 53.0 / 3.0 - 8.3, 1e-9);
    EXPECT_NEAR(r_suite["operator_count_delta"].get<double>(), 25.0 / 3.0 - 8.3, 1e-9);

    Outcome r = icsr({"report", out, "--out", (dir_ / "report").string()});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    EXPECT_EQ(testing::slurp(dir_ / "report" / "summary.csv"),
              testing::slurp(dir_ / "bench" / "summary.csv"));

    Outcome c = icsr({"ood", "--candidates", (dir_ / "bench" / "cells.json").string(), "--out",
                      (dir_ / "ood").string()});
    ASSERT_EQ(c.code, exit_ok) << c.err;
    EXPECT_TRUE(std::filesystem::exists(dir_ / "ood" / "ood.csv"));
}

TEST_F(CliRun, OracleOodIsFlat) {
    Outcome o = icsr({"ood", "--oracle", "--suite", "nguyen", "--extensions", "0,0.5,1", "--out",
                      (dir_ / "ood").string()});
    ASSERT_EQ(o.code, exit_ok) << o.err;
    EXPECT_EQ(testing::slurp(dir_ / "ood" / "ood.csv"),
              "benchmark,extension,mean_r2_clamped,neg_fraction,count\n"
              "nguyen,0.00,1.000000,0.000000,12\n"
              "nguyen,0.50,1.000000,0.000000,12\n"
              "nguyen,1.00,1.000000,0.000000,12\n");
}

TEST_F(CliRun, AblationFlagsRecorded) {
    Outcome o = icsr({"run", "--benchmark", "nguyen8", "--mode", "seed-only", "--ns", "5",
                      "--lambda", "0", "--replay-dir", scripts_, "--out",
                      (dir_ / "abl").string()});
    ASSERT_EQ(o.code, exit_ok) << o.err;
    auto cfg = read_json(dir_ / "abl" / "config.json");
    EXPECT_EQ(cfg["engine"]["mode"], "seed-only");
    EXPECT_EQ(cfg["engine"]["seed_calls"], 5);
    EXPECT_EQ(cfg["score"]["lambda"], 0.0);
}

TEST_F(CliRun, ConfigFileThenFlagOverride) {
    testing::spit(dir_ / "c.json", R"({"engine": {"top_k": 3, "seed_calls": 4}})");
    Outcome o = icsr({"run", "--config", (dir_ / "c.json").string(), "--topk", "2",
                      "--benchmark", "nguyen8", "--replay-dir", scripts_, "--out",
                      (dir_ / "cfg").string()});
    ASSERT_EQ(o.code, exit_ok) << o.err;
    auto cfg = read_json(dir_ / "cfg" / "config.json");
    EXPECT_EQ(cfg["engine"]["top_k"], 2);
    EXPECT_EQ(cfg["engine"]["seed_calls"], 4);

    testing::spit(dir_ / "bad.json", R"({"engine": {"topk": 3}})");
    EXPECT_EQ(icsr({"run", "--config", (dir_ / "bad.json").string(), "--benchmark", "nguyen8",
                    "--out", (dir_ / "bad").string()})
                  .code,
              exit_config);
}

} // namespace
} // namespace icsr::cli
