/*
 * Copyright 2026 The nodedp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nodedp/cli.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "json.hpp"

namespace nodedp {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nodedp");
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Dir(const std::string& name) {
  const fs::path p = fs::path(NODEDP_TEST_TMPDIR) / name;
  fs::remove_all(p);
  return p.string();
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json ReadJson(const std::string& path) { return nlohmann::json::parse(Slurp(path)); }

std::string MakeGraph(const std::string& name) {
  const std::string dir = Dir(name);
  const CliRun r = Cli({"gen", "--model", "planted", "--n", "300", "--d", "4", "--classes", "2", "--p-intra", "0.03",
                     "--p-inter", "0.003", "--separation", "6", "--seed", "1", "--out", dir});
  EXPECT_EQ(r.code, 0) << r.err;
  return dir;
}

TEST(CliTest, GenIsDeterministic) {
  const std::string a = Dir("gen_a"), b = Dir("gen_b");
  ASSERT_EQ(Cli({"gen", "--model", "er", "--n", "100", "--p", "0.1", "--seed", "1", "--out", a}).code, 0);
  ASSERT_EQ(Cli({"gen", "--model", "er", "--n", "100", "--p", "0.1", "--seed", "1", "--out", b}).code, 0);
  for (const char* f : {"nodes.csv", "edges.txt", "graph.json"}) {
    EXPECT_EQ(Slurp(a + "/" + f), Slurp(b + "/" + f)) << f;
  }
  const nlohmann::json m = ReadJson(a + "/manifest.json");
  EXPECT_EQ(m["subcommand"], "gen");
  EXPECT_EQ(m["seed"], 1);
  EXPECT_EQ(m["config"]["p"], "0.1");
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({"gen", "--model", "er", "--n", "100", "--p", "1.5", "--out", Dir("bad")}).code, kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"calibrate", "--max-dout", "10"}).code, kExitUsage);
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
}

TEST(CliTest, CalibrateErrorsAndOrdering) {
  EXPECT_EQ(Cli({"calibrate", "--eps", "0", "--max-dout", "10"}).code, kExitIntegrity);
  const CliRun enforced = Cli({"calibrate", "--eps", "4", "--qb", "0.01", "--t", "100", "--max-dout", "1000"});
  const CliRun loose =
      Cli({"calibrate", "--eps", "4", "--qb", "0.01", "--t", "100", "--max-dout", "1000", "--no-overlap-enforce"});
  ASSERT_EQ(enforced.code, 0) << enforced.err;
  ASSERT_EQ(loose.code, 0) << loose.err;
  const auto je = nlohmann::json::parse(enforced.out), jl = nlohmann::json::parse(loose.out);
  EXPECT_GE(jl["sigma"].get<double>(), je["sigma"].get<double>());
  EXPECT_NEAR(je["pmf_checksum"].get<double>(), 1.0, 1e-12);
  EXPECT_TRUE(je.contains("argmax_dout"));
}

TEST(CliTest, CalibrateLongRunNeedsWiderAlphaGrid) {
  const std::vector<std::string> base{"calibrate", "--eps", "2", "--delta", "1e-5", "--qb", "0.01",
                                      "--m", "1", "--t", "900", "--max-dout", "20000"};
  EXPECT_EQ(Cli(base).code, kExitIntegrity);
  std::string alphas;
  for (int i = 1; i <= 390; ++i) alphas += (i > 1 ? "," : "") + std::to_string(1.0 + 0.1 * i);
  std::vector<std::string> wide = base;
  wide.push_back("--alphas");
  wide.push_back(alphas);
  const CliRun r = Cli(wide);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LE(j["epsilon"].get<double>(), 2.0);
  EXPECT_EQ(j["argmax_dout"], 20000);
}

TEST(CliTest, TrainEvalAndReplay) {
  const std::string g = MakeGraph("graph_train");
  const std::string out = Dir("train");
  const CliRun r = Cli({"train", "--nodes", g + "/nodes.csv", "--edges", g + "/edges.txt", "--t", "40", "--hidden", "8",
                     "--qb", "0.1", "--sigma", "0", "--seed", "5", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json report = ReadJson(out + "/report.json");
  EXPECT_EQ(report["epsilon"], "inf");
  EXPECT_EQ(report["losses"].size(), 40u);
  for (const char* f : {"model.bin", "model.json", "loss.csv", "split.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out + "/" + f)) << f;
  }
  const nlohmann::json manifest = ReadJson(out + "/manifest.json");
  EXPECT_EQ(manifest["inputs"].size(), 2u);

  const std::string replay = Dir("train_replay");
  ASSERT_EQ(Cli({"train", "--config", out + "/manifest.json", "--out", replay}).code, 0);
  EXPECT_EQ(Slurp(out + "/model.bin"), Slurp(replay + "/model.bin"));

  const std::string ev = Dir("eval");
  const CliRun e = Cli({"eval", "--nodes", g + "/nodes.csv", "--edges", g + "/edges.txt", "--model", out, "--seed", "5",
                     "--out", ev});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_DOUBLE_EQ(ReadJson(ev + "/eval.json")["accuracy"].get<double>(), report["accuracy"].get<double>());
}

TEST(CliTest, ExplicitFlagsOverrideConfig) {
  const std::string g = MakeGraph("graph_cfg");
  const std::string cfg = Dir("cfg_file") + ".json";
  std::ofstream(cfg) << R"({"t": 9, "hidden": 4, "sigma": 0.5, "nodes": ")" << g << R"(/nodes.csv", "edges": ")" << g
                     << R"(/edges.txt"})";
  const std::string out = Dir("train_cfg");
  ASSERT_EQ(Cli({"train", "--config", cfg, "--t", "3", "--out", out}).code, 0);
  const nlohmann::json report = ReadJson(out + "/report.json");
  EXPECT_EQ(report["losses"].size(), 3u);
  EXPECT_DOUBLE_EQ(report["sigma"].get<double>(), 0.5);
}

TEST(CliTest, BadInputsAreIntegrityErrors) {
  const std::string dir = Dir("bad_inputs");
  fs::create_directories(dir);
  std::ofstream(dir + "/nodes.csv") << "0,0,1\n1,0,1\n";
  std::ofstream(dir + "/edges.txt") << "0 7\n";
  EXPECT_EQ(Cli({"train", "--nodes", dir + "/nodes.csv", "--edges", dir + "/edges.txt", "--out", dir + "/o"}).code,
            kExitIntegrity);
}

TEST(CliTest, AuditAndImpact) {
  const std::string g = MakeGraph("graph_audit");
  const std::string out = Dir("audit");
  const CliRun r = Cli({"audit", "--nodes", g + "/nodes.csv", "--edges", g + "/edges.txt", "--eps", "4", "--t", "1",
                     "--qb", "0.05", "--hidden", "4", "--trials", "300", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json j = ReadJson(out + "/audit.json");
  EXPECT_TRUE(j.contains("empirical_eps"));
  EXPECT_TRUE(j.contains("best_attack_accuracy"));
  EXPECT_TRUE(fs::exists(out + "/audit.csv"));

  const std::string imp = Dir("impact");
  const CliRun i = Cli({"impact", "--n", "30", "--classes", "3", "--d", "4", "--repeats", "3", "--chi", "0,0.5",
                     "--out", imp});
  ASSERT_EQ(i.code, 0) << i.err;
  EXPECT_EQ(ReadJson(imp + "/impact.json").size(), 2u);
}

}  // namespace
}  // namespace nodedp
