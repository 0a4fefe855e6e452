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

#include "sensilogit/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>
#include <tuple>

#include "sensilogit/error.hpp"

namespace sensilogit {

HedonicScale HedonicScale::numeric(int categories) {
  if (categories < 2) throw_usage("hedonic scale needs at least 2 categories");
  HedonicScale scale;
  for (int j = 1; j <= categories; ++j) scale.labels.push_back(std::to_string(j));
  return scale;
}

CollapseMap::CollapseMap(int target_categories, std::vector<int> mapping)
    : target_(target_categories), mapping_(std::move(mapping)) {
  if (target_ < 2) throw_usage("collapse map: target scale needs at least 2 categories");
  if (mapping_.empty()) throw_usage("collapse map: empty mapping");
  std::vector<bool> hit(static_cast<std::size_t>(target_), false);
  for (std::size_t i = 0; i < mapping_.size(); ++i) {
    const int m = mapping_[i];
    if (m < 1 || m > target_) {
      throw_usage("collapse map: category " + std::to_string(i + 1) + " maps to " +
                  std::to_string(m) + ", outside 1.." + std::to_string(target_));
    }
    if (i > 0 && m < mapping_[i - 1]) {
      throw_usage("collapse map: not monotone at source category " + std::to_string(i + 1));
    }
    hit[static_cast<std::size_t>(m - 1)] = true;
  }
  for (int j = 0; j < target_; ++j) {
    if (!hit[static_cast<std::size_t>(j)]) {
      throw_usage("collapse map: not surjective (target category " + std::to_string(j + 1) +
                  " unused)");
    }
  }
}

CollapseMap CollapseMap::from_json(const nlohmann::json& object, int target_categories) {
  if (!object.is_object()) throw_usage("collapse map must be a JSON object");
  const auto n = object.size();
  std::vector<int> mapping(n, 0);
  for (const auto& [key, value] : object.items()) {
    int source = 0;
    const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), source);
    if (ec != std::errc() || ptr != key.data() + key.size() || source < 1 ||
        static_cast<std::size_t>(source) > n) {
      throw_usage("collapse map: source categories must be 1.." + std::to_string(n) +
                  ", got key \"" + key + "\"");
    }
    if (!value.is_number_integer()) throw_usage("collapse map: values must be integers");
    mapping[static_cast<std::size_t>(source - 1)] = value.get<int>();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (mapping[i] == 0) throw_usage("collapse map: not total, category " + std::to_string(i + 1));
  }
  return CollapseMap(target_categories, std::move(mapping));
}

CollapseMap CollapseMap::hedonic_nine_to_five() {
  return CollapseMap(5, {1, 1, 2, 2, 3, 4, 4, 5, 5});
}

int CollapseMap::apply(int response) const {
  if (response < 1 || response > source_categories()) {
    throw_data("collapse map: response " + std::to_string(response) + " outside source scale");
  }
  return mapping_[static_cast<std::size_t>(response - 1)];
}

LevelRegistry::LevelRegistry(std::vector<std::string> names) {
  for (auto& n : names) {
    if (find(n)) throw_usage("duplicate level name \"" + n + "\"");
    add(n);
  }
}

std::size_t LevelRegistry::add(const std::string& name) {
  if (auto it = index_.find(name); it != index_.end()) return it->second;
  const std::size_t idx = names_.size();
  names_.push_back(name);
  index_.emplace(name, idx);
  return idx;
}

std::optional<std::size_t> LevelRegistry::find(const std::string& name) const {
  if (auto it = index_.find(name); it != index_.end()) return it->second;
  return std::nullopt;
}

std::size_t LevelRegistry::index_of(const std::string& name) const {
  if (auto idx = find(name)) return *idx;
  throw_usage("unknown level \"" + name + "\"");
}

OrdinalDataset::OrdinalDataset(std::vector<Observation> observations, HedonicScale scale,
                               LevelRegistry formulations, LevelRegistry attributes,
                               LevelRegistry panellists)
    : observations_(std::move(observations)),
      scale_(std::move(scale)),
      formulations_(std::move(formulations)),
      attributes_(std::move(attributes)),
      panellists_(std::move(panellists)) {
  if (scale_.categories() < 2) throw_data("dataset scale needs at least 2 categories");
  if (formulations_.empty() || attributes_.empty() || panellists_.empty()) {
    throw_data("dataset registries must be non-empty");
  }
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (const auto& o : observations_) {
    if (o.panellist >= panellists_.size() || o.formulation >= formulations_.size() ||
        o.attribute >= attributes_.size()) {
      throw_data("observation references an unregistered level");
    }
    if (o.response < 1 || o.response > scale_.categories()) {
      throw_data("response out of range: " + std::to_string(o.response) + " not in 1.." +
                 std::to_string(scale_.categories()));
    }
    if (!seen.emplace(o.panellist, o.formulation, o.attribute).second) {
      throw_data("duplicate observation for panellist \"" + panellists_.name(o.panellist) +
                 "\", formulation \"" + formulations_.name(o.formulation) + "\", attribute \"" +
                 attributes_.name(o.attribute) + "\"");
    }
  }
}

std::uint64_t OrdinalDataset::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xffU;
    h *= 1099511628211ULL;
  };
  mix(std::to_string(scale_.categories()));
  for (const auto& o : observations_) {
    mix(panellists_.name(o.panellist));
    mix(formulations_.name(o.formulation));
    mix(attributes_.name(o.attribute));
    mix(std::to_string(o.response));
  }
  return h;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// RFC 4180-style split: double quotes delimit fields, "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(trim(field));
  return out;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw_data("missing column \"" + name + "\"");
  return static_cast<std::size_t>(it - header.begin());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

namespace {

// "F2" < "F10": digit runs compare by value.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i;
      std::size_t je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view na(a.data() + i, ie - i);
      std::string_view nb(b.data() + j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return a.size() - i < b.size() - j;
  return a < b;
}

// Old-index -> new-index map and the naturally ordered registry.
std::pair<std::vector<std::size_t>, LevelRegistry> natural_order(const LevelRegistry& reg) {
  std::vector<std::string> names = reg.names();
  std::stable_sort(names.begin(), names.end(), natural_less);
  LevelRegistry sorted(names);
  std::vector<std::size_t> remap(reg.size());
  for (std::size_t i = 0; i < reg.size(); ++i) remap[i] = sorted.index_of(reg.name(i));
  return {std::move(remap), std::move(sorted)};
}

}  // namespace

OrdinalDataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw_data("CSV input is empty (header row required)");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  const auto header = split_csv_line(line);
  const std::size_t c_panel = column_index(header, schema.panellist);
  const std::size_t c_form = column_index(header, schema.formulation);
  const bool has_attribute = !schema.attribute.empty();
  const std::size_t c_attr = has_attribute ? column_index(header, schema.attribute) : 0;
  const std::size_t c_resp = column_index(header, schema.response);

  LevelRegistry formulations;
  LevelRegistry attributes;
  const bool fixed_forms = schema.formulation_levels.has_value();
  const bool fixed_attrs = schema.attribute_levels.has_value();
  if (fixed_forms) formulations = LevelRegistry(*schema.formulation_levels);
  if (fixed_attrs) attributes = LevelRegistry(*schema.attribute_levels);
  if (!has_attribute && !fixed_attrs) attributes.add("all");
  LevelRegistry panellists;
  std::vector<Observation> obs;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const std::size_t needed = std::max({c_panel, c_form, c_attr, c_resp}) + 1;
    if (fields.size() < needed) {
      throw_data("line " + std::to_string(line_no) + ": expected at least " +
                 std::to_string(needed) + " fields");
    }
    Observation o;
    o.panellist = panellists.add(fields[c_panel]);
    const std::string& form = fields[c_form];
    if (fixed_forms) {
      const auto idx = formulations.find(form);
      if (!idx) throw_data("line " + std::to_string(line_no) + ": unknown formulation \"" + form + "\"");
      o.formulation = *idx;
    } else {
      o.formulation = formulations.add(form);
    }
    if (has_attribute) {
      const std::string& attr = fields[c_attr];
      if (fixed_attrs) {
        const auto idx = attributes.find(attr);
        if (!idx) throw_data("line " + std::to_string(line_no) + ": unknown attribute \"" + attr + "\"");
        o.attribute = *idx;
      } else {
        o.attribute = attributes.add(attr);
      }
    }
    const std::string& resp = fields[c_resp];
    int value = 0;
    const auto [ptr, ec] = std::from_chars(resp.data(), resp.data() + resp.size(), value);
    if (ec != std::errc() || ptr != resp.data() + resp.size()) {
      throw_data("line " + std::to_string(line_no) + ": unparsable response \"" + resp + "\"");
    }
    if (value < 1 || value > schema.categories) {
      throw_data("line " + std::to_string(line_no) + ": response out of range (" + resp +
                 " not in 1.." + std::to_string(schema.categories) + ")");
    }
    o.response = value;
    obs.push_back(o);
  }
  if (obs.empty()) throw_data("CSV input has no observations");
  if (!fixed_forms) {
    const auto remap = natural_order(formulations);
    for (auto& o : obs) o.formulation = remap.first[o.formulation];
    formulations = remap.second;
  }
  if (has_attribute && !fixed_attrs) {
    const auto remap = natural_order(attributes);
    for (auto& o : obs) o.attribute = remap.first[o.attribute];
    attributes = remap.second;
  }
  return OrdinalDataset(std::move(obs), HedonicScale::numeric(schema.categories),
                        std::move(formulations), std::move(attributes), std::move(panellists));
}

OrdinalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open data file " + path.string());
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const OrdinalDataset& ds) {
  out << "panellist,formulation,attribute,response\n";
  for (const auto& o : ds.observations()) {
    out << csv_field(ds.panellists().name(o.panellist)) << ','
        << csv_field(ds.formulations().name(o.formulation)) << ','
        << csv_field(ds.attributes().name(o.attribute)) << ',' << o.response << '\n';
  }
}

OrdinalDataset collapse_scale(const OrdinalDataset& ds, const CollapseMap& map) {
  if (map.source_categories() != ds.scale().categories()) {
    throw_usage("collapse map expects a " + std::to_string(map.source_categories()) +
                "-point scale, dataset has " + std::to_string(ds.scale().categories()));
  }
  std::vector<Observation> obs = ds.observations();
  for (auto& o : obs) o.response = map.apply(o.response);
  return OrdinalDataset(std::move(obs), HedonicScale::numeric(map.target_categories()),
                        ds.formulations(), ds.attributes(), ds.panellists());
}

OrdinalDataset select_attribute(const OrdinalDataset& ds, const std::string& attribute) {
  const auto idx = ds.attributes().find(attribute);
  if (!idx) throw_usage("unknown attribute \"" + attribute + "\"");
  std::vector<Observation> obs;
  LevelRegistry panellists;
  for (const auto& o : ds.observations()) {
    if (o.attribute != *idx) continue;
    Observation copy = o;
    copy.attribute = 0;
    copy.panellist = panellists.add(ds.panellists().name(o.panellist));
    obs.push_back(copy);
  }
  if (obs.empty()) throw_data("attribute \"" + attribute + "\" has no observations");
  return OrdinalDataset(std::move(obs), ds.scale(), ds.formulations(),
                        LevelRegistry({attribute}), std::move(panellists));
}

DesignMatrix dummy_encode(const OrdinalDataset& ds, const FactorReferences& refs) {
  const auto f_ref = ds.formulations().find(refs.formulation);
  if (!f_ref) throw_usage("unknown formulation reference level \"" + refs.formulation + "\"");
  const auto a_ref = ds.attributes().find(refs.attribute);
  if (!a_ref) throw_usage("unknown attribute reference level \"" + refs.attribute + "\"");

  DesignMatrix d;
  d.formulation_reference = *f_ref;
  d.attribute_reference = *a_ref;
  d.formulation_columns = ds.formulations().size() - 1;
  d.attribute_columns = ds.attributes().size() - 1;
  for (std::size_t t = 0; t < ds.formulations().size(); ++t) {
    if (t != *f_ref) d.column_names.push_back("formulation:" + ds.formulations().name(t));
  }
  for (std::size_t l = 0; l < ds.attributes().size(); ++l) {
    if (l != *a_ref) d.column_names.push_back("attribute:" + ds.attributes().name(l));
  }
  const auto cols = static_cast<Eigen::Index>(d.formulation_columns + d.attribute_columns);
  d.rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.size()), cols);
  auto column_of = [](std::size_t level, std::size_t ref) {
    return level < ref ? level : level - 1;
  };
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& o = ds.observations()[i];
    const auto r = static_cast<Eigen::Index>(i);
    if (o.formulation != *f_ref) {
      d.rows(r, static_cast<Eigen::Index>(column_of(o.formulation, *f_ref))) = 1.0;
    }
    if (o.attribute != *a_ref) {
      d.rows(r, static_cast<Eigen::Index>(d.formulation_columns +
                                          column_of(o.attribute, *a_ref))) = 1.0;
    }
  }
  return d;
}

std::pair<std::size_t, std::size_t> decode_design_row(const DesignMatrix& design,
                                                      const Eigen::RowVectorXd& row) {
  auto decode = [&row](std::size_t offset, std::size_t count, std::size_t ref) {
    std::size_t level = ref;
    int hits = 0;
    for (std::size_t c = 0; c < count; ++c) {
      if (row(static_cast<Eigen::Index>(offset + c)) != 0.0) {
        level = c < ref ? c : c + 1;
        ++hits;
      }
    }
    if (hits > 1) throw_data("design row has more than one indicator set for a factor");
    return level;
  };
  return {decode(0, design.formulation_columns, design.formulation_reference),
          decode(design.formulation_columns, design.attribute_columns,
                 design.attribute_reference)};
}

Eigen::MatrixXd contingency_table(const OrdinalDataset& ds, const std::string& attribute) {
  const auto idx = ds.attributes().find(attribute);
  if (!idx) throw_usage("unknown attribute \"" + attribute + "\"");
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.formulations().size()),
                                                ds.scale().categories());
  for (const auto& o : ds.observations()) {
    if (o.attribute != *idx) continue;
    table(static_cast<Eigen::Index>(o.formulation), o.response - 1) += 1.0;
  }
  return table;
}

std::vector<std::vector<std::vector<double>>> observed_proportions(const OrdinalDataset& ds) {
  const auto J = static_cast<std::size_t>(ds.scale().categories());
  std::vector<std::vector<std::vector<double>>> out(
      ds.formulations().size(),
      std::vector<std::vector<double>>(ds.attributes().size(), std::vector<double>(J, 0.0)));
  std::vector<std::vector<double>> totals(ds.formulations().size(),
                                          std::vector<double>(ds.attributes().size(), 0.0));
  for (const auto& o : ds.observations()) {
    out[o.formulation][o.attribute][static_cast<std::size_t>(o.response - 1)] += 1.0;
    totals[o.formulation][o.attribute] += 1.0;
  }
  for (std::size_t f = 0; f < out.size(); ++f) {
    for (std::size_t a = 0; a < out[f].size(); ++a) {
      if (totals[f][a] == 0.0) continue;
      for (auto& p : out[f][a]) p /= totals[f][a];
    }
  }
  return out;
}

}  // namespace sensilogit
