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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sensilogit/error.hpp"
#include "sensilogit/pipeline.hpp"

using namespace sensilogit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sensilogit_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const Json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Json synthetic_config() {
  return Json::parse(R"({
    "seed": 3,
    "out": "synth",
    "simulate": {"dataset": {
      "formulations": ["F1", "F2", "F3", "F4"],
      "attributes": ["aroma", "body"],
      "block_size": 2,
      "multiplier": 10,
      "cutpoints": [-2.0, -0.7, 0.7, 2.0],
      "formulation_effects": [0.0, -1.2, -0.4, 0.3],
      "attribute_effects": [0.0, 0.5],
      "sigma_u": 1.0}}
  })");
}

}  // namespace

TEST_CASE("unknown keys are rejected by name") {
  const auto dir = scratch("keys");
  Json doc = Json::parse(R"({"data": {"path": "x.csv"}, "options": {"quadorder": 10}})");
  CHECK_THROWS_WITH_AS(parse_config(doc, "fit", dir), doctest::Contains("\"quadorder\""), Error);
  doc = Json::parse(R"({"dta": {}})");
  CHECK_THROWS_WITH_AS(parse_config(doc, "fit", dir), doctest::Contains("\"dta\""), Error);
  doc = Json::parse(R"({"design": {"t": 7, "h": 3, "block": 7}})");
  CHECK_THROWS_WITH_AS(parse_config(doc, "design", dir), doctest::Contains("\"block\""), Error);
}

TEST_CASE("overrides win over the config") {
  const auto dir = scratch("overrides");
  const Json doc = Json::parse(R"({"seed": 5, "out": "a", "design": {"t": 7, "h": 3}})");
  RunOverrides o;
  o.seed = 9;
  o.out = dir / "b";
  const auto c = parse_config(doc, "design", dir, o);
  CHECK(c.seed == 9);
  CHECK(c.out == dir / "b");
  CHECK(parse_config(doc, "design", dir).out == dir / "a");
}

TEST_CASE("design command writes a balanced layout") {
  const auto dir = scratch("design");
  const auto cfg = write_config(dir, Json::parse(R"({"out": "out", "design": {"t": 7, "h": 3, "panellists": 14}})"));
  run_command("design", cfg);
  const auto layout = slurp(dir / "out" / "layout.csv");
  CHECK(layout.rfind("panellist,block,position,formulation\n", 0) == 0);
  CHECK(std::count(layout.begin(), layout.end(), '\n') == 1 + 14 * 3);
  CHECK(slurp(dir / "out" / "summary.txt").find("lambda") != std::string::npos);

  const auto bad = write_config(dir, Json::parse(R"({"out": "bad", "design": {"t": 13, "h": 4, "b": 100, "r": 40}})"));
  CHECK_THROWS_WITH_AS(run_command("design", bad), doctest::Contains("rt != hb (520 != 400)"), Error);
}

TEST_CASE("synthetic data, fit, report and explore") {
  const auto dir = scratch("flow");
  run_command("simulate", write_config(dir, synthetic_config()));
  const auto data = dir / "synth" / "data.csv";
  REQUIRE(fs::exists(data));

  Json fit = Json::parse(R"({"seed": 3, "out": "fit", "data": {"path": "synth/data.csv"}})");
  run_command("fit", write_config(dir, fit));
  for (const char* f : {"fit.json", "tests.json", "predictions.csv", "predictions.json",
                        "observed_predicted.csv", "summary.txt", "metadata.json"}) {
    CHECK_MESSAGE(fs::exists(dir / "fit" / f), f);
  }
  const auto summary = slurp(dir / "fit" / "summary.txt");
  CHECK(summary.find("Proportional odds: LRT") != std::string::npos);
  CHECK(summary.find("formulation: LRT") != std::string::npos);
  CHECK(summary.find("Least accepted:") != std::string::npos);
  const auto tests = Json::parse(slurp(dir / "fit" / "tests.json"));
  CHECK(tests.contains("proportionality"));
  CHECK(tests["covariates"]["formulation"]["p_value"].get<double>() < 0.01);

  Json report = Json::parse(R"({"out": "report", "fit": "fit/fit.json", "options": {"averaging": "conditional"}})");
  run_command("report", write_config(dir, report));
  const auto pred = Json::parse(slurp(dir / "report" / "predictions.json"));
  CHECK(pred.dump().find("conditional") != std::string::npos);

  Json ex = Json::parse(R"({"out": "explore", "data": {"path": "synth/data.csv"}})");
  run_command("explore", write_config(dir, ex));
  const auto coords = slurp(dir / "explore" / "coords.csv");
  CHECK(coords.rfind("label,axis1,axis2,type\n", 0) == 0);
  CHECK(std::count(coords.begin(), coords.end(), '\n') == 1 + 4 + 2 + 5);
}

TEST_CASE("nine-point data collapses to five categories") {
  const auto dir = scratch("collapse");
  {
    std::ofstream csv(dir / "nine.csv");
    csv << "panellist,formulation,attribute,response\n";
    int v = 0;
    for (int p = 1; p <= 30; ++p) {
      for (int f = 1; f <= 3; ++f) csv << "P" << p << ",F" << f << ",taste," << (1 + (v++ * 7 + f) % 9) << "\n";
    }
  }
  Json doc = Json::parse(R"({"data": {"path": "nine.csv", "categories": 9}})");
  CHECK_THROWS_WITH_AS(load_dataset(parse_config(doc, "fit", dir)), doctest::Contains("collapse"), Error);
  doc["data"]["collapse"] = "nine_to_five";
  const auto ds = load_dataset(parse_config(doc, "fit", dir));
  CHECK(ds.scale().categories() == 5);
  CHECK(ds.size() == 90);
}

TEST_CASE("simulation study command") {
  const auto dir = scratch("study");
  const auto cfg = write_config(dir, Json::parse(R"({"seed": 2, "out": "study",
      "simulate": {"scenarios": ["F1<F3<F2", "F1=F2=F3"], "replicates": 2}})"));
  run_command("simulate", cfg);
  const auto csv = slurp(dir / "study" / "concordance.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("F1<F3<F2,90,2,") != std::string::npos);
  const auto j = Json::parse(slurp(dir / "study" / "concordance.json"));
  CHECK(j.dump().find("F1=F2=F3") != std::string::npos);
}

TEST_CASE("missing inputs are data errors") {
  const auto dir = scratch("missing");
  CHECK_THROWS_AS(run_command("fit", dir / "nope.json"), Error);
  const auto cfg = write_config(dir, Json::parse(R"({"data": {"path": "absent.csv"}})"));
  try {
    run_command("fit", cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
  }
}
