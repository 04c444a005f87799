// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>

#include "adacred/cli/commands.hpp"
#include "adacred/cli/manifest.hpp"
#include "adacred/cli/svg.hpp"
#include "adacred/dataset/dataset_io.hpp"
#include "adacred/errors.hpp"

namespace adacred::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / "adacred_cli_test" / info->name();
    fs::remove_all(root_);
    fs::create_directories(root_);
  }

  std::string dir(const std::string& name) const { return (root_ / name).string(); }

  int run(std::vector<std::string> args) const { return run_cli(args); }

  // A tiny key-door dataset plus a short stage-1 run on it.
  void make_dataset(const std::string& out, bool imitation = false) const {
    std::vector<std::string> args{"gen-data", "--env", "keydoor", "--episodes", "6", "--policy", "mixed",
                                  "--seed",   "7",     "--out",   out};
    if (imitation) args.push_back("--imitation");
    ASSERT_EQ(run(args), kExitOk);
  }

  void train_stage1(const std::string& data, const std::string& out) const {
    ASSERT_EQ(run({"train", "--data", data, "--stage", "1", "--ctx", "4", "--layers", "1", "--steps", "3", "--batch",
                   "2", "--out", out}),
              kExitOk);
  }

  fs::path root_;
};

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), kExitUsage);
  EXPECT_EQ(exit_code_for(CapacityError("x")), kExitUsage);
  EXPECT_EQ(exit_code_for(DependencyError("x")), kExitDependency);
  EXPECT_EQ(exit_code_for(FormatError("x", 0)), kExitFormat);
  EXPECT_EQ(exit_code_for(NumericalError("x")), kExitNumerical);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), kExitFailure);
}

TEST(DefaultConfig, MaterializesEveryOption) {
  EXPECT_EQ(default_config("train").at("keep_spatial").get<double>(), 75.0);
  EXPECT_EQ(default_config("train").at("keep_temporal").get<double>(), 75.0);
  EXPECT_EQ(default_config("eval").at("seeds").get<int>(), 10);
  EXPECT_EQ(default_config("eval").at("episodes").get<int>(), 10);
  EXPECT_EQ(default_config("sweep").at("grid").get<std::string>(), "50:50,50:100,40:80,100:50,100:100");
  EXPECT_THROW(default_config("nope"), ConfigError);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), kExitUsage);
  EXPECT_EQ(run({"frobnicate"}), kExitUsage);
  EXPECT_EQ(run({"gen-data", "--out", dir("a")}), kExitUsage);
  EXPECT_EQ(run({"gen-data", "--env", "keydoor", "--episodes", "many", "--out", dir("a")}), kExitUsage);
  EXPECT_EQ(run({"gen-data", "--env", "keydoor", "--bogus", "1"}), kExitUsage);
  EXPECT_EQ(run({"gen-data", "--help"}), kExitOk);
}

TEST_F(CliTest, GenDataWritesDatasetAndManifest) {
  make_dataset(dir("data"));
  const OfflineDataset ds = read_dataset(dir("data") + "/dataset.adcr");
  EXPECT_EQ(ds.trajectories.size(), 6u);
  const RunManifest m = read_manifest(dir("data") + "/" + kManifestName);
  EXPECT_EQ(m.command, "gen-data");
  EXPECT_EQ(m.seed, 7u);
  EXPECT_EQ(m.config.at("policy"), "mixed");
  EXPECT_EQ(m.config.at("episode_length"), default_config("gen-data").at("episode_length"));
  EXPECT_EQ(m.artifacts, (std::vector<std::string>{"dataset.adcr"}));
}

TEST_F(CliTest, ImitationZeroesRewards) {
  make_dataset(dir("data"), true);
  const OfflineDataset ds = read_dataset(dir("data") + "/dataset.adcr");
  EXPECT_TRUE(ds.imitation);
  for (const Trajectory& t : ds.trajectories) {
    for (float r : t.rewards) EXPECT_EQ(r, 0.0f);
  }
}

TEST_F(CliTest, ConfigFileThenFlagsPrecedence) {
  const std::string cfg = dir("run.cfg");
  write_file(cfg, "# comment\nenv = keydoor\nepisodes = 3\nseed = 11\n");
  ASSERT_EQ(run({"gen-data", "--config", cfg, "--episodes", "2", "--out", dir("a")}), kExitOk);
  const RunManifest m = read_manifest(dir("a") + "/" + kManifestName);
  EXPECT_EQ(m.config.at("episodes"), 2);
  EXPECT_EQ(m.config.at("seed"), 11);
  write_file(cfg, "nonsense_key = 1\n");
  EXPECT_EQ(run({"gen-data", "--config", cfg, "--env", "keydoor", "--out", dir("b")}), kExitUsage);
}

TEST_F(CliTest, SeedEnvironmentOverride) {
  ::setenv("ADACRED_SEED", "99", 1);
  const int code = run({"gen-data", "--env", "keydoor", "--episodes", "1", "--out", dir("a")});
  ::unsetenv("ADACRED_SEED");
  ASSERT_EQ(code, kExitOk);
  EXPECT_EQ(read_manifest(dir("a") + "/" + kManifestName).seed, 99u);
}

TEST_F(CliTest, StageTwoWithoutCheckpointIsDependencyError) {
  make_dataset(dir("data"));
  EXPECT_EQ(run({"train", "--data", dir("data") + "/dataset.adcr", "--stage", "2", "--out", dir("t")}),
            kExitDependency);
}

TEST_F(CliTest, CorruptDatasetIsFormatError) {
  write_file(dir("bad.adcr"), "definitely not a dataset");
  EXPECT_EQ(run({"train", "--data", dir("bad.adcr"), "--out", dir("t")}), kExitFormat);
}

TEST_F(CliTest, TrainEvalMasksAndSweep) {
  make_dataset(dir("data"));
  const std::string data = dir("data") + "/dataset.adcr";
  train_stage1(data, dir("sweep/s100_t100"));
  const std::string ck = dir("sweep/s100_t100") + "/checkpoint.adck";
  ASSERT_TRUE(fs::exists(ck));
  const std::string csv = read_file(dir("sweep/s100_t100") + "/metrics.csv");
  EXPECT_EQ(csv.rfind("step,l_total,l_action,l_eff,keep_spatial_0,keep_temporal_0,", 0), 0u);

  ASSERT_EQ(run({"train", "--data", data, "--stage", "2", "--init", ck, "--steps", "2", "--batch", "2",
                 "--keep-spatial", "50", "--keep-temporal", "100", "--out", dir("sweep/s50_t100")}),
            kExitOk);

  ASSERT_EQ(run({"eval", "--checkpoint", ck, "--seeds", "2", "--episodes", "2", "--out", dir("e")}), kExitOk);
  const json ev = json::parse(read_file(dir("e") + "/eval.json"));
  EXPECT_EQ(ev.at("episodes"), 4);

  ASSERT_EQ(run({"masks", "--checkpoint", ck, "--data", data, "--mode", "ones", "--out", dir("m")}), kExitOk);
  const json masks = json::parse(read_file(dir("m") + "/masks.json"));
  std::size_t entries = 0;
  for (const auto* key : {"spatial", "temporal"}) {
    for (const json& v : masks.at(key).flatten()) {
      EXPECT_EQ(v, 1);
      ++entries;
    }
  }
  EXPECT_GT(entries, 0u);
  EXPECT_EQ(read_file(dir("m") + "/masks.svg").find("class=\"dropped\""), std::string::npos);

  ASSERT_EQ(run({"masks", "--checkpoint", ck, "--data", data, "--mode", "stoch", "--out", dir("m2")}), kExitOk);
  for (const json& v : json::parse(read_file(dir("m2") + "/masks.json")).at("spatial").flatten()) {
    EXPECT_TRUE(v == 0 || v == 1);
  }
  EXPECT_EQ(run({"masks", "--checkpoint", ck, "--data", data, "--start", "1000", "--out", dir("m3")}), kExitUsage);

  ASSERT_EQ(run({"sweep", "--root", dir("sweep"), "--seeds", "1", "--episodes", "1", "--out", dir("s")}), kExitOk);
  const std::string sweep = read_file(dir("s") + "/sweep.csv");
  EXPECT_NE(sweep.find("\n100,100,1,"), std::string::npos);
  EXPECT_NE(sweep.find("\n50,100,1,"), std::string::npos);
  EXPECT_NE(sweep.find("\n50,50,0,"), std::string::npos);
  EXPECT_NE(sweep.find("\n40,80,0,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir("s") + "/sweep.svg"));
}

TEST_F(CliTest, RerunReproducesMetricsByteForByte) {
  make_dataset(dir("data"));
  train_stage1(dir("data") + "/dataset.adcr", dir("t"));
  ASSERT_EQ(run({"rerun", dir("t") + "/" + kManifestName, "--out", dir("t2")}), kExitOk);
  EXPECT_EQ(read_file(dir("t") + "/metrics.csv"), read_file(dir("t2") + "/metrics.csv"));
  EXPECT_EQ(read_manifest(dir("t") + "/" + kManifestName).input_hash,
            read_manifest(dir("t2") + "/" + kManifestName).input_hash);
}

TEST_F(CliTest, CausalReports) {
  ASSERT_EQ(run({"causal", "--prune-check", "--out", dir("p")}), kExitOk);
  const json pr = json::parse(read_file(dir("p") + "/causal_report.json"));
  EXPECT_EQ(pr.at("prune_check").at("fraction"), 0.0);

  ASSERT_EQ(run({"causal", "--identify", "--transitions", "10000", "--d", "4", "--out", dir("i")}), kExitOk);
  const json id = json::parse(read_file(dir("i") + "/causal_report.json"));
  EXPECT_GE(id.at("identify").at("f1").get<double>(), 0.0);
  EXPECT_LE(id.at("identify").at("f1").get<double>(), 1.0);

  EXPECT_EQ(run({"causal", "--d", "20", "--prune-check", "--out", dir("c")}), kExitUsage);
}

TEST(Manifest, JsonRoundTrip) {
  RunManifest m;
  m.command = "train";
  m.config = {{"seed", 3}, {"out", "x"}};
  m.seed = 3;
  m.input_hash = sha1_hex("abc");
  m.inputs = {"a"};
  m.artifacts = {"b", "c"};
  m.started = m.finished = "2026-01-01T00:00:00Z";
  const RunManifest r = manifest_from_json(manifest_to_json(m));
  EXPECT_EQ(manifest_to_json(r), manifest_to_json(m));
  EXPECT_EQ(sha1_hex("abc"), "a9993e364706816aba3e25717850c26c9cd0d89d");
}

TEST(Svg, BarChartMarksAbsentCells) {
  const std::string svg = bar_chart_svg("t", {{"(100,100)", 1.0, 0.1, true}, {"(50,50)", 0, 0, false}}, "T0");
  EXPECT_NE(svg.find("(100,100)"), std::string::npos);
  EXPECT_NE(svg.find("absent"), std::string::npos);
  EXPECT_EQ(bar_chart_svg("t", {{"a", 1.0, 0.0, true}}, "T0"), bar_chart_svg("t", {{"a", 1.0, 0.0, true}}, "T0"));
}

}  // namespace
}  // namespace adacred::cli
