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

#include <functional>
#include <sstream>
#include <string>

#include "doctest.h"
#include "sensilogit/dataset.hpp"
#include "sensilogit/error.hpp"

using namespace sensilogit;

namespace {

OrdinalDataset parse(const std::string& text, int categories = 5) {
  std::istringstream in(text);
  CsvSchema schema;
  schema.categories = categories;
  return read_csv(in, schema);
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const char* kSmall =
    "panellist,formulation,attribute,response\n"
    "P1,F2,aroma,4\n"
    "P1,F10,aroma,5\n"
    "P1,F1,body,1\n"
    "P2,F1,aroma,3\n"
    "P2,F2,body,2\n"
    "P2,F10,body,5\n";

}  // namespace

TEST_CASE("csv ingestion orders levels naturally") {
  const auto ds = parse(kSmall);
  CHECK(ds.size() == 6);
  REQUIRE(ds.formulations().size() == 3);
  CHECK(ds.formulations().name(0) == "F1");
  CHECK(ds.formulations().name(1) == "F2");
  CHECK(ds.formulations().name(2) == "F10");
  CHECK(ds.attributes().names() == std::vector<std::string>{"aroma", "body"});
  CHECK(ds.panellists().size() == 2);
  const auto& o = ds.observations()[1];
  CHECK(ds.formulations().name(o.formulation) == "F10");
  CHECK(o.response == 5);
}

TEST_CASE("csv ingestion honours explicit level order") {
  std::istringstream in(kSmall);
  CsvSchema schema;
  schema.categories = 5;
  schema.formulation_levels = std::vector<std::string>{"F10", "F2", "F1"};
  const auto ds = read_csv(in, schema);
  CHECK(ds.formulations().name(0) == "F10");
  CHECK(ds.formulations().name(ds.observations()[0].formulation) == "F2");
}

TEST_CASE("csv quoting and custom columns") {
  std::istringstream in("judge,sample,score\n\"A, 1\",\"F\"\"x\",2\nB,F1,3\n");
  CsvSchema schema;
  schema.panellist = "judge";
  schema.formulation = "sample";
  schema.attribute = "";
  schema.response = "score";
  schema.categories = 3;
  const auto ds = read_csv(in, schema);
  CHECK(ds.panellists().name(0) == "A, 1");
  CHECK(ds.formulations().find("F\"x").has_value());
  CHECK(ds.attributes().names() == std::vector<std::string>{"all"});
}

TEST_CASE("csv errors name the problem") {
  CHECK(error_of([] { parse("panellist,formulation,attribute\nP1,F1,a\n"); }).find("missing column \"response\"") !=
        std::string::npos);
  CHECK(error_of([] { parse("panellist,formulation,attribute,response\nP1,F1,a,x\n"); })
            .find("unparsable response") != std::string::npos);
  CHECK(error_of([] { parse("panellist,formulation,attribute,response\nP1,F1,a,7\n"); })
            .find("response out of range") != std::string::npos);
  CHECK(error_of([] { parse("panellist,formulation,attribute,response\nP1,F1,a,2\nP1,F1,a,3\n"); })
            .find("duplicate observation") != std::string::npos);
  CHECK(error_of([] { parse(""); }).find("empty") != std::string::npos);
  try {
    parse("panellist,formulation,attribute,response\nP1,F1,a,x\n");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
  }
}

TEST_CASE("csv write and read round trip") {
  const auto ds = parse(kSmall);
  std::ostringstream out;
  write_csv(out, ds);
  const auto back = parse(out.str());
  CHECK(back.fingerprint() == ds.fingerprint());
  std::ostringstream again;
  write_csv(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("fingerprint tracks content") {
  const auto a = parse(kSmall);
  std::string changed = kSmall;
  changed.replace(changed.find("P2,F10,body,5"), 13, "P2,F10,body,4");
  CHECK(parse(changed).fingerprint() != a.fingerprint());
  CHECK(parse(kSmall).fingerprint() == a.fingerprint());
}

TEST_CASE("nine to five collapse") {
  const auto map = CollapseMap::hedonic_nine_to_five();
  const int want[] = {1, 1, 2, 2, 3, 4, 4, 5, 5};
  for (int s = 1; s <= 9; ++s) CHECK(map.apply(s) == want[s - 1]);
  std::ostringstream rows;
  rows << "panellist,formulation,attribute,response\n";
  for (int s = 1; s <= 9; ++s) rows << "P" << s << ",F1,a," << s << "\n";
  const auto ds = parse(rows.str(), 9);
  const auto collapsed = collapse_scale(ds, map);
  CHECK(collapsed.size() == ds.size());
  CHECK(collapsed.scale().categories() == 5);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(collapsed.observations()[i].response == want[ds.observations()[i].response - 1]);
  }
  CHECK_THROWS_AS(collapse_scale(collapsed, map), Error);
}

TEST_CASE("collapse maps must be total, monotone and surjective") {
  CHECK(error_of([] { CollapseMap(3, {1, 3, 2}); }).find("not monotone") != std::string::npos);
  CHECK(error_of([] { CollapseMap(3, {1, 1, 3}); }).find("not surjective") != std::string::npos);
  CHECK(error_of([] { CollapseMap::from_json(nlohmann::json{{"1", 1}, {"3", 2}}, 2); }) != "");
  const auto m = CollapseMap::from_json(nlohmann::json{{"1", 1}, {"2", 1}, {"3", 2}}, 2);
  CHECK(m.apply(3) == 2);
}

TEST_CASE("dummy coding round trips through decode") {
  const auto ds = parse(kSmall);
  const auto d = dummy_encode(ds, {"F2", "body"});
  CHECK(d.rows.cols() == 3);
  CHECK(d.column_names == std::vector<std::string>{"formulation:F1", "formulation:F10", "attribute:aroma"});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto [f, a] = decode_design_row(d, d.rows.row(static_cast<Eigen::Index>(i)));
    CHECK(f == ds.observations()[i].formulation);
    CHECK(a == ds.observations()[i].attribute);
    CHECK(d.rows.row(static_cast<Eigen::Index>(i)).sum() <= 2.0);
  }
  CHECK_THROWS_AS(dummy_encode(ds, {"F9", "body"}), Error);
}

TEST_CASE("contingency tables and proportions") {
  const auto ds = parse(kSmall);
  const auto t = contingency_table(ds, "body");
  CHECK(t.sum() == 3.0);
  CHECK(t(0, 0) == 1.0);
  CHECK(t(2, 4) == 1.0);
  const auto p = observed_proportions(ds);
  CHECK(p[0][0][2] == 1.0);
  const auto only = select_attribute(ds, "aroma");
  CHECK(only.size() == 3);
  CHECK(only.attributes().size() == 1);
  CHECK_THROWS_AS(select_attribute(ds, "colour"), Error);
}
