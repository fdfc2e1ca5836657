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


#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spinforge/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = spinforge::cli;
  CLI::App app{"spinforge: NMR spin-system simulation and pulse design"};
  app.set_version_flag("--version", cli::version());
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  std::string out_dir;
  for (const auto& name : cli::command_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " workflow");
    sub->add_option("--config", config, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "RNG seed, overrides the config");
    sub->add_option("--out", out_dir, "output directory, overrides the config");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInputError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  cli::CommandOptions options;
  if (chosen->count("--seed") > 0) options.seed = seed;
  if (chosen->count("--out") > 0) options.out_dir = std::filesystem::path(out_dir);
  return cli::run_and_report(chosen->get_name(), config, options);
}
