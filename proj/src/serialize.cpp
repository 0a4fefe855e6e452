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

#include "sensilogit/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sensilogit/error.hpp"

namespace sensilogit {
namespace {

Json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double read_number(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw_usage("expected a number, got " + j.dump());
  return j.get<double>();
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}


}  // namespace

Json to_json(const ModelSpec& spec) {
  Json terms = Json::array();
  for (const auto& t : spec.terms) {
    terms.push_back({{"factor", to_string(t.factor)},
                     {"levels", t.levels},
                     {"reference", t.levels.at(t.reference)},
                     {"odds", to_string(t.odds)}});
  }
  return {{"categories", spec.categories},
          {"terms", terms},
          {"random_intercept", spec.random_intercept}};
}

ModelSpec spec_from_json(const Json& j) {
  try {
    ModelSpec spec;
    spec.categories = j.at("categories").get<int>();
    spec.random_intercept = j.at("random_intercept").get<bool>();
    for (const auto& t : j.at("terms")) {
      FactorTerm term;
      const auto factor = t.at("factor").get<std::string>();
      if (factor == "formulation") {
        term.factor = Factor::formulation;
      } else if (factor == "attribute") {
        term.factor = Factor::attribute;
      } else {
        throw_usage("unknown factor \"" + factor + "\"");
      }
      term.levels = t.at("levels").get<std::vector<std::string>>();
      const auto ref = t.at("reference").get<std::string>();
      const auto it = std::find(term.levels.begin(), term.levels.end(), ref);
      if (it == term.levels.end()) throw_usage("reference \"" + ref + "\" is not a level");
      term.reference = static_cast<std::size_t>(it - term.levels.begin());
      const auto odds = t.at("odds").get<std::string>();
      if (odds == to_string(OddsStructure::proportional)) {
        term.odds = OddsStructure::proportional;
      } else if (odds == to_string(OddsStructure::non_proportional)) {
        term.odds = OddsStructure::non_proportional;
      } else {
        throw_usage("unknown odds structure \"" + odds + "\"");
      }
      spec.terms.push_back(std::move(term));
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw_usage(std::string("malformed model spec: ") + e.what());
  }
}

Json to_json(const FittedModel& fit) {
  const ParamLayout layout(fit.spec);
  Json params = Json::array();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double se = std::numeric_limits<double>::quiet_NaN();
    if (fit.vcov_valid && fit.vcov.rows() == fit.params.size() && std::isfinite(fit.vcov(ii, ii))) {
      se = std::sqrt(std::max(fit.vcov(ii, ii), 0.0));
    }
    params.push_back({{"name", layout.names()[i]},
                      {"label", layout.labels()[i]},
                      {"estimate", number(fit.params(ii))},
                      {"se", number(se)}});
  }
  Json vcov = nullptr;
  if (fit.vcov_valid) {
    vcov = Json::array();
    for (Eigen::Index i = 0; i < fit.vcov.rows(); ++i) {
      Json row = Json::array();
      for (Eigen::Index k = 0; k < fit.vcov.cols(); ++k) row.push_back(number(fit.vcov(i, k)));
      vcov.push_back(std::move(row));
    }
  }
  Json fixed = Json::array();
  for (auto f : fit.fixed) fixed.push_back(layout.names()[f]);
  return {{"spec", to_json(fit.spec)},
          {"loglik", number(fit.loglik)},
          {"n_obs", fit.n_obs},
          {"n_panels", fit.n_panels},
          {"n_params", fit.n_params()},
          {"data_fingerprint", hex64(fit.data_fingerprint)},
          {"sigma_u", number(fit.sigma_u())},
          {"convergence",
           {{"status", to_string(fit.convergence.status)},
            {"iterations", fit.convergence.iterations},
            {"gradient_norm", number(fit.convergence.gradient_norm)}}},
          {"diagnostics",
           {{"floored", fit.diagnostics.floored},
            {"non_monotone_points", fit.diagnostics.non_monotone_points},
            {"separation", fit.diagnostics.separation},
            {"sigma_boundary", fit.diagnostics.sigma_boundary},
            {"warnings", fit.diagnostics.warnings}}},
          {"fixed", fixed},
          {"parameters", params},
          {"vcov", vcov}};
}

FittedModel fitted_from_json(const Json& j) {
  try {
    FittedModel fit;
    fit.spec = spec_from_json(j.at("spec"));
    const ParamLayout layout(fit.spec);
    const auto& params = j.at("parameters");
    if (params.size() != layout.size()) {
      throw_usage("expected " + std::to_string(layout.size()) + " parameters, got " +
                  std::to_string(params.size()));
    }
    fit.params.resize(static_cast<Eigen::Index>(layout.size()));
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto name = params[i].at("name").get<std::string>();
      if (name != layout.names()[i]) {
        throw_usage("parameter " + std::to_string(i + 1) + " is \"" + name + "\", expected \"" +
                    layout.names()[i] + "\"");
      }
      fit.params(static_cast<Eigen::Index>(i)) = read_number(params[i].at("estimate"));
    }
    if (!fit.params.allFinite()) throw_usage("parameter estimates must be finite");
    fit.loglik = j.contains("loglik") ? read_number(j["loglik"]) : 0.0;
    fit.n_obs = j.value("n_obs", std::size_t{0});
    fit.n_panels = j.value("n_panels", std::size_t{0});
    if (j.contains("data_fingerprint")) {
      fit.data_fingerprint = std::stoull(j["data_fingerprint"].get<std::string>(), nullptr, 16);
    }
    const auto n = static_cast<Eigen::Index>(layout.size());
    if (j.contains("vcov") && !j["vcov"].is_null()) {
      const auto& v = j["vcov"];
      if (v.size() != layout.size()) throw_usage("vcov has the wrong dimension");
      fit.vcov.resize(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        if (v[static_cast<std::size_t>(r)].size() != layout.size()) {
          throw_usage("vcov has the wrong dimension");
        }
        for (Eigen::Index c = 0; c < n; ++c) {
          fit.vcov(r, c) = read_number(v[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
        }
      }
      fit.vcov_valid = true;
    } else {
      fit.vcov = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    }
    if (j.contains("convergence")) {
      const auto status = j["convergence"].value("status", std::string("converged"));
      for (auto s : {FitStatus::converged, FitStatus::max_iterations, FitStatus::line_search_failed}) {
        if (to_string(s) == status) fit.convergence.status = s;
      }
      fit.convergence.iterations = j["convergence"].value("iterations", 0);
    }
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw_usage(std::string("malformed fit document: ") + e.what());
  }
}

Json to_json(const TestResult& t) {
  Json out{{"statistic", number(t.statistic)},
           {"df", number(t.df)},
           {"reference", t.reference},
           {"p_value", number(t.p_value)},
           {"p_display", format_p(t.p_value)}};
  if (t.p_boundary) {
    out["p_boundary"] = number(*t.p_boundary);
    out["boundary_reference"] = "0.5 chi2(0) + 0.5 chi2(1)";
  }
  out["null"] = t.null_desc;
  out["alternative"] = t.alt_desc;
  return out;
}

Json to_json(const std::vector<WaldRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back({{"name", r.name},
                   {"label", r.label},
                   {"estimate", number(r.estimate)},
                   {"se", number(r.se)},
                   {"z", number(r.z)},
                   {"p_value", number(r.p_value)},
                   {"p_display", format_p(r.p_value)}});
  }
  return out;
}

Json to_json(const ProfileCI& ci) {
  Json trace = Json::array();
  for (const auto& p : ci.trace) trace.push_back({{"sigma", number(p.sigma)}, {"loglik", number(p.loglik)}});
  return {{"parameter", ci.parameter},
          {"level", ci.level},
          {"estimate", number(ci.estimate)},
          {"lower", number(ci.lower)},
          {"upper", number(ci.upper)},
          {"lower_open", ci.lower_open},
          {"upper_open", ci.upper_open},
          {"contains_zero", ci.contains_zero},
          {"trace", trace}};
}

Json to_json(const PredictionTable& table) {
  Json cells = Json::array();
  for (std::size_t f = 0; f < table.formulations.size(); ++f) {
    for (std::size_t a = 0; a < table.attributes.size(); ++a) {
      Json probs = Json::array();
      for (double p : table.at(f, a).probs) probs.push_back(number(p));
      cells.push_back({{"formulation", table.formulations[f]},
                       {"attribute", table.attributes[a]},
                       {"probs", probs},
                       {"acceptance", number(table.at(f, a).acceptance)}});
    }
  }
  return {{"averaging", to_string(table.averaging)},
          {"threshold", table.threshold},
          {"categories", table.categories},
          {"formulations", table.formulations},
          {"attributes", table.attributes},
          {"cells", cells}};
}

Json to_json(const std::vector<RankEntry>& ranking) {
  Json out = Json::array();
  for (const auto& r : ranking) {
    out.push_back({{"rank", r.rank},
                   {"formulation", r.formulation},
                   {"score", number(r.score)},
                   {"tied", r.tied}});
  }
  return out;
}

namespace {

Json matrix_rows(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number(m(i, k)));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

Json to_json(const CAResult& ca) {
  return {{"n", number(ca.n)},
          {"total_inertia", number(ca.total_inertia)},
          {"singular_values", ca.singular_values},
          {"inertia_share", ca.inertia_share},
          {"row_coords", matrix_rows(ca.row_coords)},
          {"col_coords", matrix_rows(ca.col_coords)}};
}

Json to_json(const McaResult& mca) {
  Json points = Json::array();
  for (std::size_t j = 0; j < mca.labels.size(); ++j) {
    Json coords = Json::array();
    for (Eigen::Index k = 0; k < mca.ca.col_coords.cols(); ++k) {
      coords.push_back(number(mca.ca.col_coords(static_cast<Eigen::Index>(j), k)));
    }
    points.push_back({{"label", mca.labels[j]}, {"type", mca.types[j]}, {"coords", coords}});
  }
  return {{"n", number(mca.ca.n)},
          {"total_inertia", number(mca.ca.total_inertia)},
          {"singular_values", mca.ca.singular_values},
          {"inertia_share", mca.ca.inertia_share},
          {"points", points},
          {"warnings", mca.warnings}};
}

Json to_json(const design::BibdLayout& layout) {
  const auto& p = layout.params;
  return {{"t", p.t},         {"b", p.b},
          {"h", p.h},         {"r", p.r},
          {"lambda", p.lambda}, {"blocks", layout.blocks},
          {"serving_orders", layout.serving_orders}};
}

Json to_json(const ConcordanceReport& report) {
  static const char* kModels[] = {"unified", "attribute_A", "attribute_B"};
  Json scenarios = Json::array();
  for (const auto& s : report.scenarios) {
    Json models = Json::object();
    for (std::size_t m = 0; m < 3; ++m) {
      models[kModels[m]] = {{"concordant", s.concordant[m]},
                            {"failures", s.failures[m]},
                            {"rate", number(s.rate(m))},
                            {"rate_failures_discordant", number(s.sensitivity_rate(m))}};
    }
    Json records = Json::array();
    for (const auto& r : s.records) {
      Json rec{{"replicate", r.replicate}};
      for (std::size_t m = 0; m < 3; ++m) {
        rec[kModels[m]] = r.inferred[m].empty() ? Json(nullptr) : Json(r.inferred[m]);
        if (!r.failure[m].empty()) rec[std::string(kModels[m]) + "_failure"] = r.failure[m];
      }
      records.push_back(std::move(rec));
    }
    scenarios.push_back({{"pattern", s.pattern},
                         {"panellists", s.panellists},
                         {"replicates", s.replicates},
                         {"models", models},
                         {"records", records}});
  }
  return {{"scenarios", scenarios},
          {"total_fits", report.total_fits()},
          {"total_failures", report.total_failures()}};
}

}  // namespace sensilogit
