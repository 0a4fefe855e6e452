// Copyright 2026 The sensilogit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end over the C API.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sensilogit/sensilogit.h"

int main(int argc, char** argv) {
  CLI::App app{"Cumulative-logit analysis of hedonic panel ratings"};
  app.set_version_flag("--version", std::string(sl_version()));
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"fit", "Model selection, final fit, predictions and ranking"},
      {"simulate", "Concordance study or synthetic dataset"},
      {"design", "Validate and generate a balanced incomplete block layout"},
      {"explore", "Chi-square association tests and correspondence coordinates"},
      {"report", "Predictions and ranking from a saved fit.json"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out, "Override the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : SL_ERR_USAGE;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const sl_status status = sl_run(command.c_str(), config.c_str(), out.empty() ? nullptr : out.c_str(),
                                  seed.has_value() ? 1 : 0, seed.value_or(0));
  if (status != SL_OK) {
    std::fprintf(stderr, "sensilogit %s: %s\n", command.c_str(), sl_last_error());
    return static_cast<int>(status);
  }
  return 0;
}
