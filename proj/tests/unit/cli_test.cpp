// Copyright 2026 The Spinforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "spinforge/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

namespace spinforge::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kConfigs = fs::path(SPINFORGE_DATA_DIR) / "configs";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("spinforge_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  // Runs the installed binary; returns its exit status.
  static int run(const std::string& args) {
    const std::string cmd = std::string(SPINFORGE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(CliBasicsTest, NamesAndHash) {
  const std::vector<std::string> want{"spectrum", "optimize", "pseudopure", "dephasing", "sequence"};
  for (const auto& w : want) {
    EXPECT_NE(std::find(command_names().begin(), command_names().end(), w), command_names().end()) << w;
  }
  // FNV-1a 64 of the empty object "{}".
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : std::string("{}")) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::ostringstream hex;
  hex << std::hex;
  hex.width(16);
  hex.fill('0');
  hex << h;
  EXPECT_EQ(config_hash(nlohmann::json::object()), hex.str());
  EXPECT_NE(config_hash({{"a", 1}}), config_hash({{"a", 2}}));
  EXPECT_FALSE(version().empty());
}

TEST_F(CliTest, ExitCodesForBadInput) {
  EXPECT_EQ(run("--version"), 0);
  EXPECT_EQ(run("spectrum"), 2);
  EXPECT_EQ(run("nonsense --config " + (kConfigs / "spectrum_malonic.json").string()), 2);
  EXPECT_EQ(run("spectrum --config " + write("bad.json", "{\"schema\": 1,").string()), 2);
  EXPECT_EQ(run("spectrum --config " + write("keys.json", R"({"schema": 1, "sytem": "malonic"})").string()), 2);
  EXPECT_EQ(run("spectrum --config " + write("schema.json", R"({"schema": 7})").string()), 2);
  EXPECT_EQ(run("sequence --config " + write("cmd.json", R"({"schema": 1, "command": "spectrum"})").string()), 2);
  // Physically invalid values are input errors too.
  EXPECT_EQ(run("spectrum --config " + write("eta.json", R"({"schema": 1, "eta": 2.0})").string()), 2);
}

TEST_F(CliTest, WritesIntoNestedOutDirAndStampsFiles) {
  const fs::path cfg = write("spec.json", R"({"schema": 1, "out_dir": "a/b/c", "seed": 5})");
  ASSERT_EQ(run("spectrum --config " + cfg.string()), 0);
  const fs::path out = dir_ / "a/b/c";
  ASSERT_TRUE(fs::exists(out / "spectrum.csv"));
  ASSERT_TRUE(fs::exists(out / "transitions.csv"));
  ASSERT_TRUE(fs::exists(out / "summary.json"));
  const std::string csv = slurp(out / "spectrum.csv");
  EXPECT_EQ(csv.rfind("# spinforge ", 0), 0u);
  EXPECT_NE(csv.find(" spectrum "), std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary.at("seed").get<int>(), 5);
}

TEST_F(CliTest, CommandLineOverridesConfig) {
  const fs::path cfg = write("spec.json", R"({"schema": 1, "out_dir": "from_config", "seed": 5})");
  ASSERT_EQ(run("spectrum --config " + cfg.string() + " --seed 9 --out " + (dir_ / "from_cli").string()), 0);
  EXPECT_FALSE(fs::exists(dir_ / "from_config"));
  const auto summary = nlohmann::json::parse(slurp(dir_ / "from_cli" / "summary.json"));
  EXPECT_EQ(summary.at("seed").get<int>(), 9);
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  for (const std::string name : {"spectrum_malonic", "pseudopure_ideal", "sequence_hahn_zeeman", "dephasing_single_env"}) {
    const auto cfg = nlohmann::json::parse(slurp(kConfigs / (name + ".json")));
    const std::string cmd = cfg.at("command");
    CommandOptions a, b;
    a.out_dir = dir_ / (name + "_1");
    b.out_dir = dir_ / (name + "_2");
    const CommandResult ra = run_command(cmd, cfg, kConfigs, a);
    const CommandResult rb = run_command(cmd, cfg, kConfigs, b);
    ASSERT_EQ(ra.files.size(), rb.files.size()) << name;
    for (std::size_t k = 0; k < ra.files.size(); ++k) {
      EXPECT_EQ(ra.files[k].filename(), rb.files[k].filename());
      EXPECT_EQ(slurp(ra.files[k]), slurp(rb.files[k])) << name << " " << ra.files[k];
    }
  }
}

TEST_F(CliTest, SeedChangesStochasticOutput) {
  const auto cfg = nlohmann::json::parse(slurp(kConfigs / "dephasing_single_env.json"));
  CommandOptions a, b;
  a.out_dir = dir_ / "s1";
  b.out_dir = dir_ / "s2";
  b.seed = 8;
  run_command("dephasing", cfg, kConfigs, a);
  run_command("dephasing", cfg, kConfigs, b);
  EXPECT_NE(slurp(dir_ / "s1" / "additivity.json"), slurp(dir_ / "s2" / "additivity.json"));
  // The deterministic trace differs only in its stamped header line.
  const std::string t1 = slurp(dir_ / "s1" / "trace.csv");
  const std::string t2 = slurp(dir_ / "s2" / "trace.csv");
  EXPECT_EQ(t1.substr(t1.find('\n')), t2.substr(t2.find('\n')));
}

TEST_F(CliTest, OptimizeToyReachesTarget) {
  const auto cfg = nlohmann::json::parse(slurp(kConfigs / "optimize_x90_toy.json"));
  CommandOptions o;
  o.out_dir = dir_ / "x90";
  const CommandResult r = run_command("optimize", cfg, kConfigs, o);
  EXPECT_EQ(r.exit_code, kSuccess);
  EXPECT_GE(r.summary.at("fidelity").get<double>(), 0.9999);
  EXPECT_TRUE(fs::exists(dir_ / "x90" / "pulse.json"));
  EXPECT_TRUE(fs::exists(dir_ / "x90" / "fidelity_trace.csv"));
}

TEST_F(CliTest, PseudopureWithoutCycleWarns) {
  const auto cfg = nlohmann::json::parse(slurp(kConfigs / "pseudopure_no_cycle.json"));
  CommandOptions o;
  o.out_dir = dir_ / "pp";
  const CommandResult r = run_command("pseudopure", cfg, kConfigs, o);
  EXPECT_EQ(r.exit_code, kNumericalWarning);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_LT(r.summary.at("correlation").get<double>(), 0.9);
}

TEST_F(CliTest, UnknownNestedKeyIsConfigError) {
  const nlohmann::json cfg = {{"schema", 1}, {"grid", {{"min_khz", -5}, {"max_khz", 5}, {"pts", 10}}}};
  CommandOptions o;
  o.out_dir = dir_ / "x";
  EXPECT_THROW(run_command("spectrum", cfg, dir_, o), ConfigError);
}

}  // namespace
}  // namespace spinforge::cli
