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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sensilogit/dataset.hpp"
#include "sensilogit/model.hpp"
#include "sensilogit/predict.hpp"
#include "sensilogit/serialize.hpp"

namespace sensilogit {

/// Top-level scalar overrides from the command line.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

struct DataConfig {
  std::filesystem::path path;
  CsvSchema schema;
  std::optional<CollapseMap> collapse;
};

enum class Choice { automatic, yes, no };

struct ModelConfig {
  int categories = 5;
  std::vector<Factor> terms{Factor::formulation, Factor::attribute};
  /// automatic: decided by the proportionality test.
  std::optional<OddsStructure> odds;
  Choice random_intercept = Choice::automatic;
  FactorReferences references;
};

struct OptionsConfig {
  int quad_order = 15;
  int max_iter = 1000;
  double grad_tol = 1e-6;
  int threshold = 4;
  Averaging averaging = Averaging::population;
  double alpha_level = 0.05;
  double ci_level = 0.95;
  int prediction_quad_order = kDefaultPredictionQuadOrder;
  int threads = 1;
};

struct DesignConfig {
  int t = 0;
  int h = 0;
  std::optional<int> b;
  std::optional<int> r;
  std::optional<int> panellists;
  int multiplier = 1;
  std::uint64_t node_budget = 200'000'000;
};

struct SyntheticConfig {
  SyntheticModel model;
  int block_size = 0;
  int multiplier = 1;
  int panellists = 0;
};

struct SimulateConfig {
  std::vector<std::string> scenarios;
  std::vector<int> panellists{90};
  int replicates = 200;
  double gap = 1.0;
  double sigma_u = 1.0;
  std::vector<double> cutpoints{-2.0, -0.7, 0.7, 2.0};
  double attribute_effect = 0.0;
  /// Largest tolerated fraction of failed fits.
  double failure_budget = 0.05;
  std::optional<SyntheticConfig> dataset;
};

struct RunConfig {
  std::string command;
  std::filesystem::path base_dir;
  std::uint64_t seed = 1;
  std::filesystem::path out = "sensilogit-out";
  std::optional<DataConfig> data;
  ModelConfig model;
  OptionsConfig options;
  std::optional<DesignConfig> design;
  std::optional<SimulateConfig> simulate;
  std::optional<std::filesystem::path> fit_path;
  int axes = 2;

  FitOptions fit_options() const;
};

/// Validates the whole document before any computation; unknown keys are
/// rejected by name.
RunConfig parse_config(const Json& document, const std::string& command,
                       const std::filesystem::path& base_dir, const RunOverrides& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::string& command,
                      const RunOverrides& overrides = {});

OrdinalDataset load_dataset(const RunConfig& config);

void cmd_fit(const RunConfig& config);
void cmd_simulate(const RunConfig& config);
void cmd_design(const RunConfig& config);
void cmd_explore(const RunConfig& config);
void cmd_report(const RunConfig& config);

/// Loads the config and dispatches on `command`.
void run_command(const std::string& command, const std::filesystem::path& config_path,
                 const RunOverrides& overrides = {});

}  // namespace sensilogit
