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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace sensilogit {

/// Ordered response categories; index 1 is the least liked.
struct HedonicScale {
  std::vector<std::string> labels;

  int categories() const { return static_cast<int>(labels.size()); }

  /// Scale labelled "1".."J".
  static HedonicScale numeric(int categories);
};

/// Order-preserving, surjective relabelling of response categories.
class CollapseMap {
 public:
  /// `mapping[i]` is the target category of source category i + 1.
  CollapseMap(int target_categories, std::vector<int> mapping);

  /// Parses {"9": 5, "8": 5, ...}. Every source category 1..n must be keyed.
  static CollapseMap from_json(const nlohmann::json& object, int target_categories);

  /// The 9-point to 5-point hedonic reduction:
  /// {9,8}->5, {7,6}->4, {5}->3, {4,3}->2, {2,1}->1.
  static CollapseMap hedonic_nine_to_five();

  int source_categories() const { return static_cast<int>(mapping_.size()); }
  int target_categories() const { return target_; }
  int apply(int response) const;

 private:
  int target_;
  std::vector<int> mapping_;
};

/// Names for the levels of one factor, indexed in registration order.
class LevelRegistry {
 public:
  LevelRegistry() = default;
  explicit LevelRegistry(std::vector<std::string> names);

  std::size_t add(const std::string& name);
  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// One panellist's rating of one attribute of one formulation.
/// Level indices are 0-based into the dataset registries; the response is
/// the 1-based category index.
struct Observation {
  std::size_t panellist = 0;
  std::size_t formulation = 0;
  std::size_t attribute = 0;
  int response = 0;
};

/// Immutable collection of ordinal ratings with factor registries.
class OrdinalDataset {
 public:
  OrdinalDataset(std::vector<Observation> observations, HedonicScale scale,
                 LevelRegistry formulations, LevelRegistry attributes,
                 LevelRegistry panellists);

  const std::vector<Observation>& observations() const { return observations_; }
  const HedonicScale& scale() const { return scale_; }
  const LevelRegistry& formulations() const { return formulations_; }
  const LevelRegistry& attributes() const { return attributes_; }
  const LevelRegistry& panellists() const { return panellists_; }
  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }

  /// Order-sensitive 64-bit hash of the (panellist, formulation, attribute,
  /// response) records by level name.
  std::uint64_t fingerprint() const;

 private:
  std::vector<Observation> observations_;
  HedonicScale scale_;
  LevelRegistry formulations_;
  LevelRegistry attributes_;
  LevelRegistry panellists_;
};

/// Column names and level ordering for CSV ingestion. An empty attribute
/// column means the file holds a single attribute. Without explicit level
/// lists, levels are ordered naturally by name ("F2" before "F10").
struct CsvSchema {
  std::string panellist = "panellist";
  std::string formulation = "formulation";
  std::string attribute = "attribute";
  std::string response = "response";
  int categories = 9;
  std::optional<std::vector<std::string>> formulation_levels;
  std::optional<std::vector<std::string>> attribute_levels;
};

OrdinalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
OrdinalDataset read_csv(std::istream& in, const CsvSchema& schema);
void write_csv(std::ostream& out, const OrdinalDataset& ds);

OrdinalDataset collapse_scale(const OrdinalDataset& ds, const CollapseMap& map);

/// Keeps only the observations of one attribute; the result has a single
/// attribute level.
OrdinalDataset select_attribute(const OrdinalDataset& ds, const std::string& attribute);

struct FactorReferences {
  std::string formulation;
  std::string attribute;
};

/// Dummy (treatment) coding. Columns are the non-reference formulation levels
/// in registry order, then the non-reference attribute levels.
struct DesignMatrix {
  Eigen::MatrixXd rows;
  std::vector<std::string> column_names;
  std::size_t formulation_reference = 0;
  std::size_t attribute_reference = 0;
  std::size_t formulation_columns = 0;
  std::size_t attribute_columns = 0;
};

DesignMatrix dummy_encode(const OrdinalDataset& ds, const FactorReferences& refs);

/// Recovers (formulation, attribute) level indices from an encoded row.
std::pair<std::size_t, std::size_t> decode_design_row(const DesignMatrix& design,
                                                      const Eigen::RowVectorXd& row);

/// T x J counts of response category by formulation for one attribute.
Eigen::MatrixXd contingency_table(const OrdinalDataset& ds, const std::string& attribute);

/// Empirical category proportions for each (formulation, attribute) cell;
/// result[f][a] has J entries, all zero when the cell is empty.
std::vector<std::vector<std::vector<double>>> observed_proportions(const OrdinalDataset& ds);

}  // namespace sensilogit
