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

#include "sensilogit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "sensilogit/design.hpp"
#include "sensilogit/error.hpp"
#include "sensilogit/explore.hpp"
#include "sensilogit/format.hpp"
#include "sensilogit/inference.hpp"
#include "sensilogit/mixed.hpp"
#include "sensilogit/simulate.hpp"
#include "sensilogit/version.hpp"

namespace sensilogit {
namespace fs = std::filesystem;

namespace {

// Typed access to one config object; rejects keys outside `allowed`.
class Section {
 public:
  Section(const Json& obj, std::string where, std::initializer_list<const char*> allowed)
      : obj_(obj), where_(std::move(where)) {
    if (!obj.is_object()) throw_usage("config \"" + where_ + "\" must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
      if (!ok.count(key)) {
        throw_usage("unknown config key \"" + key + "\" in " +
                    (where_.empty() ? std::string("top level") : "\"" + where_ + "\""));
      }
    }
  }

  bool has(const char* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }
  const Json& at(const char* key) const { return obj_.at(key); }
  std::string path(const char* key) const {
    return where_.empty() ? std::string(key) : where_ + "." + key;
  }

  int integer(const char* key, int fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_number_integer()) throw_usage("config \"" + path(key) + "\" must be an integer");
    return v.get<int>();
  }
  std::uint64_t unsigned64(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw_usage("config \"" + path(key) + "\" must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_number()) throw_usage("config \"" + path(key) + "\" must be a number");
    return v.get<double>();
  }
  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_string()) throw_usage("config \"" + path(key) + "\" must be a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const char* key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    std::vector<double> out;
    if (!v.is_array()) throw_usage("config \"" + path(key) + "\" must be an array of numbers");
    for (const auto& x : v) {
      if (!x.is_number()) throw_usage("config \"" + path(key) + "\" must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  std::vector<std::string> strings(const char* key) const {
    const auto& v = at(key);
    std::vector<std::string> out;
    if (!v.is_array()) throw_usage("config \"" + path(key) + "\" must be an array of strings");
    for (const auto& x : v) {
      if (!x.is_string()) throw_usage("config \"" + path(key) + "\" must be an array of strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

 private:
  const Json& obj_;
  std::string where_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw_usage(message);
}

Factor factor_from(const std::string& name) {
  if (name == "formulation") return Factor::formulation;
  if (name == "attribute") return Factor::attribute;
  throw_usage("unknown model term \"" + name + "\" (expected formulation or attribute)");
}

DataConfig parse_data(const Json& j, const fs::path& base, int model_categories) {
  Section s(j, "data", {"path", "columns", "categories", "collapse", "levels"});
  require(s.has("path"), "config \"data.path\" is required");
  DataConfig d;
  d.path = s.text("path", "");
  if (d.path.is_relative()) d.path = base / d.path;
  if (s.has("columns")) {
    Section c(s.at("columns"), "data.columns", {"panellist", "formulation", "attribute", "response"});
    d.schema.panellist = c.text("panellist", d.schema.panellist);
    d.schema.formulation = c.text("formulation", d.schema.formulation);
    d.schema.attribute = c.text("attribute", d.schema.attribute);
    d.schema.response = c.text("response", d.schema.response);
  }
  if (s.has("levels")) {
    Section l(s.at("levels"), "data.levels", {"formulation", "attribute"});
    if (l.has("formulation")) d.schema.formulation_levels = l.strings("formulation");
    if (l.has("attribute")) d.schema.attribute_levels = l.strings("attribute");
  }
  d.schema.categories = s.integer("categories", model_categories);
  require(d.schema.categories >= 2, "config \"data.categories\" must be >= 2");
  if (s.has("collapse")) {
    const auto& c = s.at("collapse");
    if (c.is_string()) {
      require(c.get<std::string>() == "nine_to_five",
              "config \"data.collapse\" must be \"nine_to_five\" or an object");
      d.collapse = CollapseMap::hedonic_nine_to_five();
      require(model_categories == 5, "the nine_to_five collapse needs model.categories = 5");
    } else {
      d.collapse = CollapseMap::from_json(nlohmann::json::parse(c.dump()), model_categories);
    }
    if (d.collapse->source_categories() != d.schema.categories) {
      throw_usage("collapse map covers " + std::to_string(d.collapse->source_categories()) +
                  " categories but data.categories is " + std::to_string(d.schema.categories));
    }
  } else if (d.schema.categories != model_categories) {
    throw_usage("data has " + std::to_string(d.schema.categories) + " categories but the model " +
                std::to_string(model_categories) + "; give data.collapse");
  }
  return d;
}

ModelConfig parse_model(const Json& j) {
  Section s(j, "model", {"categories", "terms", "odds", "random_intercept", "references"});
  ModelConfig m;
  m.categories = s.integer("categories", 5);
  require(m.categories >= 2, "config \"model.categories\" must be >= 2");
  if (s.has("terms")) {
    m.terms.clear();
    for (const auto& t : s.strings("terms")) {
      const Factor f = factor_from(t);
      require(std::find(m.terms.begin(), m.terms.end(), f) == m.terms.end(),
              "model term \"" + t + "\" listed twice");
      m.terms.push_back(f);
    }
  }
  const std::string odds = s.text("odds", "auto");
  if (odds == "proportional") {
    m.odds = OddsStructure::proportional;
  } else if (odds == "non_proportional") {
    m.odds = OddsStructure::non_proportional;
  } else {
    require(odds == "auto", "config \"model.odds\" must be auto, proportional or non_proportional");
  }
  if (s.has("random_intercept")) {
    const auto& v = s.at("random_intercept");
    if (v.is_boolean()) {
      m.random_intercept = v.get<bool>() ? Choice::yes : Choice::no;
    } else {
      require(v.is_string() && v.get<std::string>() == "auto",
              "config \"model.random_intercept\" must be true, false or \"auto\"");
    }
  }
  if (s.has("references")) {
    Section r(s.at("references"), "model.references", {"formulation", "attribute"});
    m.references.formulation = r.text("formulation", "");
    m.references.attribute = r.text("attribute", "");
  }
  return m;
}

OptionsConfig parse_options(const Json& j) {
  Section s(j, "options",
            {"quad_order", "max_iter", "grad_tol", "threshold", "averaging", "alpha_level",
             "ci_level", "prediction_quad_order", "threads"});
  OptionsConfig o;
  o.quad_order = s.integer("quad_order", o.quad_order);
  o.max_iter = s.integer("max_iter", o.max_iter);
  o.grad_tol = s.number("grad_tol", o.grad_tol);
  o.threshold = s.integer("threshold", o.threshold);
  o.averaging = averaging_from_string(s.text("averaging", to_string(o.averaging)));
  o.alpha_level = s.number("alpha_level", o.alpha_level);
  o.ci_level = s.number("ci_level", o.ci_level);
  o.prediction_quad_order = s.integer("prediction_quad_order", o.prediction_quad_order);
  o.threads = s.integer("threads", o.threads);
  require(o.quad_order >= 1 && o.quad_order <= 200, "options.quad_order must lie in 1..200");
  require(o.prediction_quad_order >= 1 && o.prediction_quad_order <= 200,
          "options.prediction_quad_order must lie in 1..200");
  require(o.max_iter >= 1, "options.max_iter must be positive");
  require(o.grad_tol > 0.0, "options.grad_tol must be positive");
  require(o.alpha_level > 0.0 && o.alpha_level < 1.0, "options.alpha_level must lie in (0, 1)");
  require(o.ci_level > 0.0 && o.ci_level < 1.0, "options.ci_level must lie in (0, 1)");
  require(o.threads >= 0, "options.threads must be >= 0");
  return o;
}

DesignConfig parse_design(const Json& j) {
  Section s(j, "design", {"t", "h", "b", "r", "panellists", "multiplier", "node_budget"});
  require(s.has("t") && s.has("h"), "config \"design\" needs t and h");
  DesignConfig d;
  d.t = s.integer("t", 0);
  d.h = s.integer("h", 0);
  if (s.has("b")) d.b = s.integer("b", 0);
  if (s.has("r")) d.r = s.integer("r", 0);
  require(d.b.has_value() == d.r.has_value(), "config \"design\" needs both b and r, or neither");
  if (s.has("panellists")) d.panellists = s.integer("panellists", 0);
  d.multiplier = s.integer("multiplier", 1);
  d.node_budget = s.unsigned64("node_budget", d.node_budget);
  require(d.multiplier >= 1, "design.multiplier must be positive");
  return d;
}

SyntheticConfig parse_synthetic(const Json& j) {
  Section s(j, "simulate.dataset",
            {"formulations", "attributes", "block_size", "multiplier", "panellists", "cutpoints",
             "formulation_effects", "formulation_effects_by_cutpoint", "attribute_effects",
             "sigma_u"});
  SyntheticConfig c;
  require(s.has("formulation_effects") || s.has("formulation_effects_by_cutpoint"),
          "config \"simulate.dataset\" needs formulation_effects");
  require(s.has("attributes") && s.has("cutpoints"),
          "config \"simulate.dataset\" needs attributes and cutpoints");
  auto& m = c.model;
  m.cutpoints = s.numbers("cutpoints", {});
  m.attributes = s.strings("attributes");
  m.attribute_effects = s.numbers("attribute_effects", std::vector<double>(m.attributes.size(), 0.0));
  m.sigma_u = s.number("sigma_u", 1.0);
  if (s.has("formulation_effects_by_cutpoint")) {
    for (const auto& row : s.at("formulation_effects_by_cutpoint")) {
      std::vector<double> r;
      require(row.is_array(), "formulation_effects_by_cutpoint must be an array of arrays");
      for (const auto& x : row) {
        require(x.is_number(), "formulation_effects_by_cutpoint must hold numbers");
        r.push_back(x.get<double>());
      }
      m.formulation_effects_by_cutpoint.push_back(std::move(r));
    }
  } else {
    m.formulation_effects = s.numbers("formulation_effects", {});
  }
  const std::size_t nf = m.formulation_effects_by_cutpoint.empty()
                             ? m.formulation_effects.size()
                             : m.formulation_effects_by_cutpoint.front().size();
  if (s.has("formulations")) {
    m.formulations = s.strings("formulations");
  } else {
    for (std::size_t f = 0; f < nf; ++f) m.formulations.push_back("F" + std::to_string(f + 1));
  }
  c.block_size = s.integer("block_size", static_cast<int>(m.formulations.size()));
  c.multiplier = s.integer("multiplier", 1);
  c.panellists = s.integer("panellists", 0);
  m.validate();
  return c;
}

SimulateConfig parse_simulate(const Json& j) {
  Section s(j, "simulate",
            {"scenarios", "panellists", "replicates", "gap", "sigma_u", "cutpoints",
             "attribute_effect", "failure_budget", "dataset"});
  SimulateConfig c;
  if (s.has("dataset")) {
    require(!s.has("scenarios"), "config \"simulate\" takes either scenarios or dataset");
    c.dataset = parse_synthetic(s.at("dataset"));
    return c;
  }
  if (s.has("scenarios")) {
    const auto& v = s.at("scenarios");
    if (v.is_string()) {
      require(v.get<std::string>() == "standard",
              "config \"simulate.scenarios\" must be a list of patterns or \"standard\"");
      c.scenarios = standard_patterns();
    } else {
      c.scenarios = s.strings("scenarios");
    }
  } else {
    c.scenarios = standard_patterns();
  }
  for (const auto& p : c.scenarios) parse_pattern(p);
  if (s.has("panellists")) {
    const auto& v = s.at("panellists");
    c.panellists.clear();
    if (v.is_array()) {
      for (const auto& x : v) {
        require(x.is_number_integer() && x.get<int>() > 0,
                "config \"simulate.panellists\" must hold positive integers");
        c.panellists.push_back(x.get<int>());
      }
    } else {
      c.panellists.push_back(s.integer("panellists", 90));
    }
  }
  c.replicates = s.integer("replicates", c.replicates);
  c.gap = s.number("gap", c.gap);
  c.sigma_u = s.number("sigma_u", c.sigma_u);
  c.cutpoints = s.numbers("cutpoints", c.cutpoints);
  c.attribute_effect = s.number("attribute_effect", c.attribute_effect);
  c.failure_budget = s.number("failure_budget", c.failure_budget);
  require(c.replicates >= 0, "simulate.replicates must be >= 0");
  require(c.failure_budget >= 0.0 && c.failure_budget <= 1.0,
          "simulate.failure_budget must lie in [0, 1]");
  return c;
}

// Output helpers ----------------------------------------------------------

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_usage("cannot write " + path.string());
  out << content;
  if (!out) throw_usage("failed writing " + path.string());
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void prepare_out(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out, ec);
  if (ec) throw_usage("cannot create output directory " + config.out.string() + ": " + ec.message());
}

void write_metadata(const RunConfig& config) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  const Json meta{{"command", config.command},
                  {"version", kVersion},
                  {"seed", config.seed},
                  {"started_utc", buf}};
  write_file(config.out / "metadata.json", dump(meta));
}

template <class F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), "stage " + name + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::usage, "stage " + name + ": " + e.what());
  }
}

std::string describe_model(const ModelSpec& spec) {
  std::string s = spec.random_intercept ? "mixed " : "fixed-effect ";
  s += spec.all_proportional() ? "proportional-odds" : "non-proportional";
  s += " cumulative logit";
  return s;
}

std::string test_line(const TestResult& t) {
  return "LRT = " + format_fixed(t.statistic, 2) + " on " + t.reference.substr(5, t.reference.size() - 6) +
         " df, p " + (t.p_value < 0.01 ? format_p(t.p_value) : "= " + format_p(t.p_value));
}

}  // namespace

FitOptions RunConfig::fit_options() const {
  FitOptions f;
  f.max_iter = options.max_iter;
  f.grad_tol = options.grad_tol;
  f.quad_order = options.quad_order;
  return f;
}

RunConfig parse_config(const Json& document, const std::string& command, const fs::path& base_dir,
                       const RunOverrides& overrides) {
  static const std::set<std::string> kCommands{"fit", "simulate", "design", "explore", "report"};
  if (!kCommands.count(command)) throw_usage("unknown command \"" + command + "\"");
  Section top(document, "",
              {"command", "seed", "out", "data", "model", "options", "design", "simulate", "fit",
               "axes"});
  RunConfig c;
  c.command = command;
  c.base_dir = base_dir;
  if (top.has("command") && top.text("command", "") != command) {
    throw_usage("config is for command \"" + top.text("command", "") + "\", not \"" + command + "\"");
  }
  c.seed = top.unsigned64("seed", 1);
  if (top.has("out")) {
    c.out = top.text("out", "");
    if (c.out.is_relative()) c.out = base_dir / c.out;
  }
  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.out) c.out = *overrides.out;
  if (top.has("model")) c.model = parse_model(top.at("model"));
  if (top.has("options")) c.options = parse_options(top.at("options"));
  require(c.options.threshold >= 2 && c.options.threshold <= c.model.categories,
          "options.threshold must lie in 2.." + std::to_string(c.model.categories));
  if (top.has("data")) c.data = parse_data(top.at("data"), base_dir, c.model.categories);
  if (top.has("design")) c.design = parse_design(top.at("design"));
  if (top.has("simulate")) c.simulate = parse_simulate(top.at("simulate"));
  if (top.has("fit")) {
    c.fit_path = top.text("fit", "");
    if (c.fit_path->is_relative()) c.fit_path = base_dir / *c.fit_path;
  }
  c.axes = top.integer("axes", 2);
  require(c.axes >= 1, "axes must be positive");

  if ((command == "fit" || command == "explore") && !c.data) {
    throw_usage("command \"" + command + "\" needs a \"data\" block");
  }
  if (command == "fit") require(!c.model.terms.empty(), "model.terms must not be empty");
  if (command == "fit") {
    require(std::find(c.model.terms.begin(), c.model.terms.end(), Factor::formulation) !=
                c.model.terms.end(),
            "model.terms must include formulation for ranking");
  }
  if (command == "design") require(c.design.has_value(), "command \"design\" needs a \"design\" block");
  if (command == "simulate") require(c.simulate.has_value(), "command \"simulate\" needs a \"simulate\" block");
  if (command == "report") require(c.fit_path.has_value(), "command \"report\" needs \"fit\" (path to fit.json)");
  return c;
}

RunConfig load_config(const fs::path& path, const std::string& command,
                      const RunOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw_usage("cannot open config " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw_usage("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, command, path.parent_path().empty() ? fs::path(".") : path.parent_path(),
                      overrides);
}

OrdinalDataset load_dataset(const RunConfig& config) {
  if (!config.data) throw_usage("no data block");
  OrdinalDataset ds = load_csv(config.data->path, config.data->schema);
  if (config.data->collapse) ds = collapse_scale(ds, *config.data->collapse);
  return ds;
}

// fit ----------------------------------------------------------------------

void cmd_fit(const RunConfig& config) {
  const OrdinalDataset ds = stage("load", [&] { return load_dataset(config); });
  prepare_out(config);
  write_metadata(config);
  const FitOptions fopts = config.fit_options();
  const OptionsConfig& o = config.options;
  Json tests = Json::object();
  auto save_tests = [&] { write_file(config.out / "tests.json", dump(tests)); };
  std::ostringstream summary;

  summary << "Data: " << ds.size() << " ratings, " << ds.panellists().size() << " panellists, "
          << ds.formulations().size() << " formulations, " << ds.attributes().size()
          << " attributes, " << ds.scale().categories() << " categories";
  if (config.data->collapse) {
    summary << " (collapsed from " << config.data->collapse->source_categories() << ")";
  }
  summary << "\n\n";

  const bool want_ri = config.model.random_intercept != Choice::no;
  const ModelSpec base = stage("model", [&] {
    return make_spec(ds, config.model.references, config.model.terms,
                     config.model.odds.value_or(OddsStructure::proportional), want_ri);
  });

  // Proportionality.
  std::optional<FittedModel> selected;
  OddsStructure odds = config.model.odds.value_or(OddsStructure::proportional);
  if (base.categories >= 3) {
    auto cmp = stage("proportionality", [&] { return compare_proportionality(ds, base, fopts); });
    tests["proportionality"] = to_json(cmp.test);
    const bool reject = cmp.test.p_value < o.alpha_level;
    if (!config.model.odds) odds = reject ? OddsStructure::non_proportional : OddsStructure::proportional;
    tests["proportionality"]["decision"] = to_string(odds);
    selected = odds == OddsStructure::proportional ? std::move(cmp.null_fit) : std::move(cmp.alt_fit);
    summary << "Proportional odds: " << test_line(cmp.test) << "; "
            << (reject ? "rejected" : "not rejected") << " at " << format_number(o.alpha_level)
            << ". Using " << to_string(odds) << " odds"
            << (config.model.odds ? " (fixed by config).\n" : ".\n");
    save_tests();
  } else {
    summary << "Proportional odds: not applicable to a binary response.\n";
  }
  const ModelSpec spec = with_odds(base, odds);
  if (!selected) {
    selected = stage("fit", [&] { return fit_model(spec, ModelData(ds, spec), fopts); });
  }

  // Covariates.
  tests["covariates"] = Json::object();
  summary << "Covariate effects:\n";
  for (const auto& term : spec.terms) {
    const std::string name = to_string(term.factor);
    auto cmp = stage("covariate " + name,
                     [&] { return compare_covariate(ds, spec, term.factor, fopts, &*selected); });
    tests["covariates"][name] = to_json(cmp.test);
    summary << "  " << name << ": " << test_line(cmp.test) << "\n";
    save_tests();
  }

  // Random effect.
  FittedModel final_fit = *selected;
  std::optional<ProfileCI> ci;
  if (want_ri) {
    ci = stage("random effect", [&] {
      ProfileOptions popts;
      popts.level = o.ci_level;
      popts.fit = fopts;
      return profile_ci_sigma(*selected, ModelData(ds, spec), popts);
    });
    const ModelSpec fixed_spec = with_random_intercept(spec, false);
    const FittedModel fixed = stage("random effect", [&] {
      return fit_model(fixed_spec, ModelData(ds, fixed_spec), fopts);
    });
    const TestResult re = stage("random effect", [&] { return lrt(fixed, *selected); });
    tests["random_effect"] = to_json(re);
    tests["random_effect"]["profile_ci"] = to_json(*ci);
    const bool keep = config.model.random_intercept == Choice::yes || !ci->contains_zero;
    tests["random_effect"]["decision"] = keep ? "included" : "dropped";
    summary << "Panellist effect: sigma_u = " << format_fixed(ci->estimate, 3) << ", "
            << format_number(100.0 * o.ci_level) << "% profile CI ("
            << (ci->lower_open ? std::string("0") : format_fixed(ci->lower, 3)) << ", "
            << (ci->upper_open ? std::string("open") : format_fixed(ci->upper, 3)) << "); "
            << "boundary LRT p " << format_p(re.p_boundary.value_or(re.p_value)) << ". "
            << (keep ? "Random intercept included.\n" : "Random intercept dropped.\n");
    std::ostringstream prof;
    prof << "sigma_u,profile_loglik\n";
    for (const auto& p : ci->trace) prof << format_number(p.sigma) << ',' << format_number(p.loglik) << '\n';
    write_file(config.out / "profile.csv", prof.str());
    if (!keep) final_fit = fixed;
    save_tests();
  }

  // Final model.
  const auto wald = stage("final fit", [&] {
    if (!final_fit.converged()) throw_numerical("final model did not converge");
    return wald_tests(final_fit);
  });
  tests["wald"] = to_json(wald);
  save_tests();
  Json fit_json = to_json(final_fit);
  write_file(config.out / "fit.json", dump(fit_json));
  summary << "\nFinal model: " << describe_model(final_fit.spec) << ", logL = "
          << format_fixed(final_fit.loglik, 3) << ", " << final_fit.n_params() << " parameters, "
          << final_fit.convergence.iterations << " iterations\n";
  for (const auto& w : final_fit.diagnostics.warnings) summary << "  warning: " << w << "\n";
  summary << "  " << "parameter" << std::string(14, ' ') << "estimate      SE   p\n";
  for (const auto& w : wald) {
    std::string label = w.label;
    label.resize(std::max<std::size_t>(label.size(), 22), ' ');
    std::string est = format_fixed(w.estimate, 3);
    std::string se = format_fixed(w.se, 3);
    summary << "  " << label << ' ' << std::string(std::max<int>(0, 8 - static_cast<int>(est.size())), ' ')
            << est << ' ' << std::string(std::max<int>(0, 7 - static_cast<int>(se.size())), ' ') << se
            << "   " << format_p(w.p_value) << "\n";
  }

  // Predictions and ranking.
  const PredictionTable table = stage("predictions", [&] {
    return predict_table(final_fit, o.threshold, o.averaging, o.prediction_quad_order);
  });
  {
    std::ostringstream csv;
    write_prediction_csv(csv, table);
    write_file(config.out / "predictions.csv", csv.str());
    std::ostringstream ovp;
    write_observed_vs_predicted(ovp, table, ds);
    write_file(config.out / "observed_predicted.csv", ovp.str());
  }
  const auto ranking = stage("ranking", [&] { return rank_formulations(acceptance_scores(table)); });
  Json pred = to_json(table);
  pred["ranking"] = to_json(ranking);
  write_file(config.out / "predictions.json", dump(pred));

  summary << "\nAcceptance P(Y>=" << o.threshold << "), " << to_string(o.averaging)
          << " probabilities, mean over attributes:\n";
  for (const auto& r : ranking) {
    summary << "  " << r.rank << ". " << r.formulation << "  " << format_fixed(r.score, 3)
            << (r.tied ? "  (tie)" : "") << "\n";
  }
  summary << "Top 3:";
  for (std::size_t i = 0; i < std::min<std::size_t>(3, ranking.size()); ++i) {
    summary << (i ? ", " : " ") << ranking[i].formulation;
  }
  summary << "\nLeast accepted: " << ranking.back().formulation << "\n";
  write_file(config.out / "summary.txt", summary.str());
}

// simulate -----------------------------------------------------------------

namespace {

void simulate_dataset_mode(const RunConfig& config) {
  const SyntheticConfig& sc = *config.simulate->dataset;
  const int t = static_cast<int>(sc.model.formulations.size());
  design::GenerateOptions gopts;
  gopts.multiplier = sc.multiplier;
  const auto layout = stage("design", [&] { return design::generate_bibd(t, sc.block_size, config.seed, gopts); });
  const int panellists = sc.panellists > 0 ? sc.panellists : layout.params.b;
  const auto schedule = stage("design", [&] { return design::assign_panellists(layout, panellists, config.seed); });
  const OrdinalDataset ds = stage("simulate", [&] { return simulate_schedule(sc.model, schedule, config.seed); });
  std::ostringstream csv;
  write_csv(csv, ds);
  write_file(config.out / "data.csv", csv.str());
  std::ostringstream summary;
  summary << "Synthetic dataset: " << ds.size() << " ratings from " << ds.panellists().size()
          << " panellists; design t=" << layout.params.t << " b=" << layout.params.b
          << " h=" << layout.params.h << " r=" << layout.params.r
          << " lambda=" << layout.params.lambda << "\n";
  write_file(config.out / "summary.txt", summary.str());
}

}  // namespace

void cmd_simulate(const RunConfig& config) {
  prepare_out(config);
  write_metadata(config);
  const SimulateConfig& sc = *config.simulate;
  if (sc.dataset) {
    simulate_dataset_mode(config);
    return;
  }
  std::vector<ScenarioSpec> scenarios;
  for (int n : sc.panellists) {
    for (const auto& p : sc.scenarios) {
      ScenarioSpec s;
      s.pattern = p;
      s.panellists = n;
      s.sigma_u = sc.sigma_u;
      s.gap = sc.gap;
      s.cutpoints = sc.cutpoints;
      s.attribute_effect = sc.attribute_effect;
      s.replicates = sc.replicates;
      s.master_seed = config.seed;
      scenarios.push_back(std::move(s));
    }
  }
  StudyOptions so;
  so.alpha_level = config.options.alpha_level;
  so.threshold = config.options.threshold;
  so.threads = config.options.threads;
  so.fit = config.fit_options();
  const ConcordanceReport report = stage("concordance", [&] { return concordance_study(scenarios, so); });
  std::ostringstream csv;
  write_concordance_csv(csv, report);
  write_file(config.out / "concordance.csv", csv.str());
  write_file(config.out / "concordance.json", dump(to_json(report)));

  std::ostringstream summary;
  summary << "Concordance with the true ordering (failed fits excluded):\n";
  summary << "  scenario        N   unified  attr A  attr B  failures\n";
  for (const auto& s : report.scenarios) {
    auto pct = [](double v) { return std::isnan(v) ? std::string("   NA") : format_fixed(100.0 * v, 1) + "%"; };
    std::string pat = s.pattern;
    pat.resize(std::max<std::size_t>(pat.size(), 14), ' ');
    summary << "  " << pat << ' ' << s.panellists << "   " << pct(s.rate(0)) << "  "
            << pct(s.rate(1)) << "  " << pct(s.rate(2)) << "  "
            << s.failures[0] + s.failures[1] + s.failures[2] << "\n";
  }
  const std::size_t fits = report.total_fits();
  const std::size_t failed = report.total_failures();
  summary << "Failed fits: " << failed << " of " << fits << "\n";
  write_file(config.out / "summary.txt", summary.str());
  if (fits > 0 && static_cast<double>(failed) > sc.failure_budget * static_cast<double>(fits)) {
    throw_numerical(std::to_string(failed) + " of " + std::to_string(fits) +
                    " fits failed, above the failure budget");
  }
}

// design -------------------------------------------------------------------

void cmd_design(const RunConfig& config) {
  const DesignConfig& d = *config.design;
  if (d.b) design::validate_bibd(d.t, *d.b, d.h, *d.r);
  prepare_out(config);
  write_metadata(config);
  design::GenerateOptions gopts;
  gopts.node_budget = d.node_budget;
  gopts.multiplier = d.multiplier;
  design::BibdLayout layout = stage("generate", [&] { return design::generate_bibd(d.t, d.h, config.seed, gopts); });
  if (d.b) {
    const int base_b = layout.params.b / d.multiplier;
    if (*d.b % base_b != 0) {
      throw_usage("no design with b = " + std::to_string(*d.b) + " found; the smallest for t=" +
                  std::to_string(d.t) + ", h=" + std::to_string(d.h) + " has b = " +
                  std::to_string(base_b));
    }
    if (*d.b != layout.params.b) {
      gopts.multiplier = *d.b / base_b;
      layout = stage("generate", [&] { return design::generate_bibd(d.t, d.h, config.seed, gopts); });
    }
  }
  const int panellists = d.panellists.value_or(layout.params.b);
  const auto schedule = stage("assign", [&] { return design::assign_panellists(layout, panellists, config.seed); });
  std::ostringstream csv;
  csv << "panellist,block,position,formulation\n";
  const std::size_t width = std::to_string(panellists).size();
  for (const auto& s : schedule) {
    std::string p = std::to_string(s.panellist + 1);
    p = "P" + std::string(width - p.size(), '0') + p;
    for (std::size_t k = 0; k < s.order.size(); ++k) {
      csv << p << ',' << s.block + 1 << ',' << k + 1 << ",F" << s.order[k] + 1 << '\n';
    }
  }
  write_file(config.out / "layout.csv", csv.str());
  Json j = to_json(layout);
  j["panellists"] = panellists;
  j["balanced"] = design::is_balanced(layout);
  write_file(config.out / "layout.json", dump(j));
  std::ostringstream summary;
  const auto& p = layout.params;
  summary << "BIBD t=" << p.t << " b=" << p.b << " h=" << p.h << " r=" << p.r << " lambda=" << p.lambda
          << "; " << panellists << " panellists, " << schedule.size() * static_cast<std::size_t>(p.h)
          << " servings\n";
  write_file(config.out / "summary.txt", summary.str());
}

// explore ------------------------------------------------------------------

void cmd_explore(const RunConfig& config) {
  const OrdinalDataset ds = stage("load", [&] { return load_dataset(config); });
  prepare_out(config);
  write_metadata(config);
  Json tests = Json::object();
  std::ostringstream summary;
  summary << "Association of formulation and response category (Pearson chi-square):\n";
  for (const auto& a : ds.attributes().names()) {
    const auto res = stage("chi-square " + a, [&] { return chisq_association(contingency_table(ds, a)); });
    tests[a] = to_json(res);
    summary << "  " << a << ": X2 = " << format_fixed(res.statistic, 2) << ", " << res.reference
            << ", p " << (res.p_value < 0.01 ? format_p(res.p_value) : "= " + format_p(res.p_value)) << "\n";
  }
  write_file(config.out / "tests.json", dump(tests));
  const McaResult mca = stage("correspondence", [&] { return mca_coordinates(ds, config.axes); });
  std::ostringstream coords;
  write_coords_csv(coords, mca);
  write_file(config.out / "coords.csv", coords.str());
  write_file(config.out / "explore.json", dump(to_json(mca)));
  summary << "Multiple correspondence (indicator matrix): total inertia "
          << format_fixed(mca.ca.total_inertia, 4) << "; axis shares";
  for (double s : mca.ca.inertia_share) summary << ' ' << format_fixed(100.0 * s, 1) << '%';
  summary << "\n";
  for (const auto& w : mca.warnings) summary << "  warning: " << w << "\n";
  write_file(config.out / "summary.txt", summary.str());
}

// report -------------------------------------------------------------------

void cmd_report(const RunConfig& config) {
  prepare_out(config);
  write_metadata(config);
  const FittedModel fit = stage("load", [&] {
    std::ifstream in(*config.fit_path);
    if (!in) throw_usage("cannot open " + config.fit_path->string());
    try {
      return fitted_from_json(Json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw_usage(std::string("fit file is not valid JSON: ") + e.what());
    }
  });
  const OptionsConfig& o = config.options;
  const PredictionTable table = stage("predictions", [&] {
    return predict_table(fit, o.threshold, o.averaging, o.prediction_quad_order);
  });
  std::ostringstream csv;
  write_prediction_csv(csv, table);
  write_file(config.out / "predictions.csv", csv.str());
  const auto ranking = rank_formulations(acceptance_scores(table));
  Json pred = to_json(table);
  pred["ranking"] = to_json(ranking);
  write_file(config.out / "predictions.json", dump(pred));
  std::ostringstream summary;
  summary << describe_model(fit.spec) << "; P(Y>=" << o.threshold << "), " << to_string(o.averaging)
          << " probabilities, mean over attributes:\n";
  for (const auto& r : ranking) {
    summary << "  " << r.rank << ". " << r.formulation << "  " << format_fixed(r.score, 3)
            << (r.tied ? "  (tie)" : "") << "\n";
  }
  write_file(config.out / "summary.txt", summary.str());
}

void run_command(const std::string& command, const fs::path& config_path,
                 const RunOverrides& overrides) {
  const RunConfig config = load_config(config_path, command, overrides);
  if (command == "fit") {
    cmd_fit(config);
  } else if (command == "simulate") {
    cmd_simulate(config);
  } else if (command == "design") {
    cmd_design(config);
  } else if (command == "explore") {
    cmd_explore(config);
  } else {
    cmd_report(config);
  }
}

}  // namespace sensilogit
