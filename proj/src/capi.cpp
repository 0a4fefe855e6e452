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

#include "sensilogit/sensilogit.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "sensilogit/error.hpp"
#include "sensilogit/inference.hpp"
#include "sensilogit/mixed.hpp"
#include "sensilogit/pipeline.hpp"
#include "sensilogit/predict.hpp"
#include "sensilogit/serialize.hpp"
#include "sensilogit/stats.hpp"
#include "sensilogit/version.hpp"

struct sl_dataset {
  sensilogit::OrdinalDataset data;
};

struct sl_fit {
  sensilogit::FittedModel fit;
};

namespace {

thread_local std::string g_last_error;

template <class F>
sl_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return SL_OK;
  } catch (const sensilogit::Error& e) {
    g_last_error = e.what();
    return static_cast<sl_status>(static_cast<int>(e.kind()));
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("invalid JSON argument: ") + e.what();
    return SL_ERR_USAGE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SL_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) sensilogit::throw_usage(std::string(what) + " is NULL");
}

sensilogit::Json parse_or_empty(const char* text) {
  if (!text || !*text) return sensilogit::Json::object();
  return sensilogit::Json::parse(text);
}

}  // namespace

extern "C" {

const char* sl_last_error(void) { return g_last_error.c_str(); }

const char* sl_version(void) { return sensilogit::kVersion; }

sl_status sl_run(const char* command, const char* config_path, const char* out_dir, int has_seed,
                 uint64_t seed) {
  return guarded([&] {
    need(command, "command");
    need(config_path, "config_path");
    sensilogit::RunOverrides ov;
    if (out_dir) ov.out = out_dir;
    if (has_seed) ov.seed = seed;
    sensilogit::run_command(command, config_path, ov);
  });
}

sl_status sl_dataset_load_csv(const char* path, const char* schema_json, sl_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    const auto j = parse_or_empty(schema_json);
    sensilogit::CsvSchema schema;
    schema.panellist = j.value("panellist", schema.panellist);
    schema.formulation = j.value("formulation", schema.formulation);
    schema.attribute = j.value("attribute", schema.attribute);
    schema.response = j.value("response", schema.response);
    schema.categories = j.value("categories", schema.categories);
    *out = new sl_dataset{sensilogit::load_csv(path, schema)};
  });
}

sl_status sl_dataset_collapse(const sl_dataset* ds, const char* collapse_json,
                              int target_categories, sl_dataset** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(collapse_json, "collapse_json");
    need(out, "out");
    *out = nullptr;
    const auto j = nlohmann::json::parse(collapse_json);
    const auto map = j.is_string() && j.get<std::string>() == "nine_to_five"
                         ? sensilogit::CollapseMap::hedonic_nine_to_five()
                         : sensilogit::CollapseMap::from_json(j, target_categories);
    *out = new sl_dataset{sensilogit::collapse_scale(ds->data, map)};
  });
}

size_t sl_dataset_size(const sl_dataset* ds) { return ds ? ds->data.size() : 0; }

void sl_dataset_free(sl_dataset* ds) { delete ds; }

sl_status sl_fit_model(const sl_dataset* ds, const char* model_json, const char* options_json,
                       sl_fit** out) {
  return guarded([&] {
    using namespace sensilogit;
    need(ds, "dataset");
    need(out, "out");
    *out = nullptr;
    const Json m = parse_or_empty(model_json);
    std::vector<Factor> factors;
    for (const auto& t : m.value("terms", std::vector<std::string>{"formulation", "attribute"})) {
      if (t == "formulation") {
        factors.push_back(Factor::formulation);
      } else if (t == "attribute") {
        factors.push_back(Factor::attribute);
      } else {
        throw_usage("unknown term \"" + t + "\"");
      }
    }
    const std::string odds = m.value("odds", std::string("proportional"));
    if (odds != "proportional" && odds != "non_proportional") {
      throw_usage("odds must be proportional or non_proportional");
    }
    FactorReferences refs;
    if (m.contains("references")) {
      refs.formulation = m["references"].value("formulation", std::string());
      refs.attribute = m["references"].value("attribute", std::string());
    }
    const ModelSpec spec =
        make_spec(ds->data, refs, factors,
                  odds == "proportional" ? OddsStructure::proportional
                                         : OddsStructure::non_proportional,
                  m.value("random_intercept", false));
    const Json o = parse_or_empty(options_json);
    FitOptions fo;
    fo.quad_order = o.value("quad_order", fo.quad_order);
    fo.max_iter = o.value("max_iter", fo.max_iter);
    fo.grad_tol = o.value("grad_tol", fo.grad_tol);
    *out = new sl_fit{fit_model(spec, ModelData(ds->data, spec), fo)};
  });
}

sl_status sl_fit_from_json(const char* json, sl_fit** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    *out = new sl_fit{sensilogit::fitted_from_json(sensilogit::Json::parse(json))};
  });
}

sl_status sl_fit_to_json(const sl_fit* fit, char** out) {
  return guarded([&] {
    need(fit, "fit");
    need(out, "out");
    *out = nullptr;
    const std::string text = sensilogit::to_json(fit->fit).dump(2);
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

sl_status sl_fit_loglik(const sl_fit* fit, double* out) {
  return guarded([&] {
    need(fit, "fit");
    need(out, "out");
    *out = fit->fit.loglik;
  });
}

size_t sl_fit_param_count(const sl_fit* fit) { return fit ? fit->fit.n_params() : 0; }

sl_status sl_fit_params(const sl_fit* fit, double* out, size_t n) {
  return guarded([&] {
    need(fit, "fit");
    need(out, "out");
    if (n != fit->fit.n_params()) {
      sensilogit::throw_usage("buffer holds " + std::to_string(n) + " values, fit has " +
                              std::to_string(fit->fit.n_params()));
    }
    for (size_t i = 0; i < n; ++i) out[i] = fit->fit.params(static_cast<Eigen::Index>(i));
  });
}

int sl_fit_converged(const sl_fit* fit) { return fit && fit->fit.converged() ? 1 : 0; }

void sl_fit_free(sl_fit* fit) { delete fit; }

void sl_string_free(char* s) { std::free(s); }

sl_status sl_predict(const sl_fit* fit, const char* formulation, const char* attribute,
                     int population, int quad_order, double* probs, size_t n) {
  return guarded([&] {
    need(fit, "fit");
    need(formulation, "formulation");
    need(attribute, "attribute");
    need(probs, "probs");
    if (n != static_cast<size_t>(fit->fit.spec.categories)) {
      sensilogit::throw_usage("probability buffer must hold " +
                              std::to_string(fit->fit.spec.categories) + " values");
    }
    const auto p = sensilogit::predict_probs(
        fit->fit, formulation, attribute,
        population ? sensilogit::Averaging::population : sensilogit::Averaging::conditional,
        quad_order > 0 ? quad_order : sensilogit::kDefaultPredictionQuadOrder);
    for (size_t j = 0; j < n; ++j) probs[j] = p[j];
  });
}

sl_status sl_lrt(const sl_fit* null_fit, const sl_fit* alt_fit, double* statistic, double* df,
                 double* p_value) {
  return guarded([&] {
    need(null_fit, "null_fit");
    need(alt_fit, "alt_fit");
    const auto r = sensilogit::lrt(null_fit->fit, alt_fit->fit);
    if (statistic) *statistic = r.statistic;
    if (df) *df = r.df;
    if (p_value) *p_value = r.p_value;
  });
}

sl_status sl_chisq_association(const double* counts, size_t rows, size_t cols, double* statistic,
                               double* df, double* p_value) {
  return guarded([&] {
    need(counts, "counts");
    Eigen::MatrixXd t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t i = 0; i < rows; ++i) {
      for (size_t j = 0; j < cols; ++j) {
        t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = counts[i * cols + j];
      }
    }
    const auto r = sensilogit::chisq_association(t);
    if (statistic) *statistic = r.statistic;
    if (df) *df = r.df;
    if (p_value) *p_value = r.p_value;
  });
}

sl_status sl_chi2_sf(double x, double df, double* p_value) {
  return guarded([&] {
    need(p_value, "p_value");
    *p_value = sensilogit::stats::chi2_sf(x, df);
  });
}

sl_status sl_bibd_validate(int t, int b, int h, int r, int* lambda) {
  return guarded([&] {
    const auto p = sensilogit::design::validate_bibd(t, b, h, r);
    if (lambda) *lambda = p.lambda;
  });
}

}  // extern "C"
