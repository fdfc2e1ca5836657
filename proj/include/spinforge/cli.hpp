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


// Config-driven front end. Each command reads a JSON config, runs one
// workflow and writes CSV/JSON files into an output directory.

#ifndef SPINFORGE_CLI_HPP_
#define SPINFORGE_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace spinforge::cli {

enum ExitCode : int {
  kSuccess = 0,
  // Finished and wrote everything, but a numerical check fell short.
  kNumericalWarning = 1,
  kInputError = 2,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
};

struct CommandResult {
  int exit_code = kSuccess;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
  nlohmann::json summary;
};

const std::vector<std::string>& command_names();

std::string version();

// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

// Relative paths inside the config resolve against `base_dir`. Throws
// ConfigError on schema problems; module errors propagate unchanged.
CommandResult run_command(const std::string& command,
                          const nlohmann::json& config,
                          const std::filesystem::path& base_dir,
                          const CommandOptions& options);

// Reads and parses the file, then runs it. Parse failures are ConfigErrors.
CommandResult run_command_file(const std::string& command,
                               const std::filesystem::path& config_path,
                               const CommandOptions& options);

// Runs a command and maps exceptions onto exit codes, printing messages to
// stderr and a short summary to stdout.
int run_and_report(const std::string& command,
                   const std::filesystem::path& config_path,
                   const CommandOptions& options);

}  // namespace spinforge::cli

#endif  // SPINFORGE_CLI_HPP_
