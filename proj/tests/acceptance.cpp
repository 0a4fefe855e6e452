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

// Acceptance checks: one PASS/FAIL line per criterion; nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "sensilogit/design.hpp"
#include "sensilogit/explore.hpp"
#include "sensilogit/inference.hpp"
#include "sensilogit/mixed.hpp"
#include "sensilogit/predict.hpp"
#include "sensilogit/simulate.hpp"
#include "sensilogit/stats.hpp"

using namespace sensilogit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Random dataset and model for gradient checks.
struct Case {
  OrdinalDataset ds;
  ModelSpec spec;
  Eigen::VectorXd params;
};

Case random_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nf(2, 5), na(2, 3), nj(3, 7), np(5, 25);
  std::uniform_real_distribution<double> eff(-1.5, 1.5);
  SyntheticModel m;
  const int f = nf(rng), a = na(rng), j = nj(rng);
  for (int i = 0; i < f; ++i) {
    m.formulations.push_back("F" + std::to_string(i + 1));
    m.formulation_effects.push_back(eff(rng));
  }
  for (int i = 0; i < a; ++i) {
    m.attributes.push_back("A" + std::to_string(i + 1));
    m.attribute_effects.push_back(eff(rng));
  }
  for (int k = 0; k < j - 1; ++k) m.cutpoints.push_back(-2.0 + 4.0 * k / std::max(1, j - 2));
  m.sigma_u = 1.0;
  Case c{simulate_schedule(m, oracle::complete_schedule(np(rng), f), seed), {}, {}};
  const auto odds = seed % 2 ? OddsStructure::non_proportional : OddsStructure::proportional;
  c.spec = make_spec(c.ds, {}, {Factor::formulation, Factor::attribute}, odds, false);
  const ParamLayout layout(c.spec);
  c.params = Eigen::VectorXd(static_cast<Eigen::Index>(layout.size()));
  std::uniform_real_distribution<double> slope(-1.0, 1.0);
  for (Eigen::Index i = 0; i < c.params.size(); ++i) c.params(i) = slope(rng);
  for (std::size_t k = 0; k < layout.cutpoints(); ++k) {
    c.params(static_cast<Eigen::Index>(k)) = -2.5 + 5.0 * static_cast<double>(k) / static_cast<double>(layout.cutpoints());
  }
  // Category-specific slopes stay within +-0.15 of a shared value so every
  // covariate point keeps increasing cumulative logits (positive probabilities).
  std::uniform_real_distribution<double> jitter(-0.15, 0.15);
  for (std::size_t t = 0; t < c.spec.terms.size(); ++t) {
    if (c.spec.terms[t].odds != OddsStructure::non_proportional) continue;
    for (std::size_t l = 0; l < c.spec.terms[t].levels.size(); ++l) {
      const auto first = layout.slope(t, 0, l);
      if (!first) continue;
      for (std::size_t k = 1; k < layout.cutpoints(); ++k) {
        c.params(static_cast<Eigen::Index>(*layout.slope(t, k, l))) =
            c.params(static_cast<Eigen::Index>(*first)) + jitter(rng);
      }
    }
  }
  return c;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t floored = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto c = random_case(1000 + s);
    const ModelData data(c.ds, c.spec);
    floored += loglik_fixed(c.spec, c.params, data).floored;
    const auto g = gradient_fixed(c.spec, c.params, data);
    for (Eigen::Index i = 0; i < c.params.size(); ++i) {
      const double h = 1e-6;
      auto a = c.params, b = c.params;
      a(i) += h;
      b(i) -= h;
      const double fd = (loglik_fixed(c.spec, a, data).value - loglik_fixed(c.spec, b, data).value) / (2 * h);
      worst = std::max(worst, std::abs(g(i) - fd) / std::max({1.0, std::abs(g(i)), std::abs(fd)}));
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 10.0 && floored == 0,
          "max relative error " + fmt("%.2e", worst) + " (|g-fd|/max(1,|g|,|fd|)), " + std::to_string(floored) +
              " floored probabilities, " + fmt("%.2f", secs) + " s"};
}

Outcome criterion2() {
  double worst = 0.0, worst31 = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::mt19937_64 rng(2000 + s);
    std::uniform_int_distribution<int> resp(1, 5), nobs(2, 2);
    std::uniform_real_distribution<double> sig(0.2, 3.0), eff(-1.0, 1.0);
    std::vector<Observation> obs;
    const int n = nobs(rng);
    for (int i = 0; i < n; ++i) obs.push_back({0, static_cast<std::size_t>(i % 4), static_cast<std::size_t>(i / 4), resp(rng)});
    const OrdinalDataset ds(obs, HedonicScale::numeric(5), LevelRegistry({"F1", "F2", "F3", "F4"}),
                            LevelRegistry({"A", "B"}), LevelRegistry({"P1"}));
    const auto spec = make_spec(ds, {}, {Factor::formulation, Factor::attribute}, OddsStructure::proportional, true);
    const ModelData data(ds, spec);
    Eigen::VectorXd p(9);
    const double sigma = sig(rng);
    p << -1.6, -0.5, 0.5, 1.6, eff(rng), eff(rng), eff(rng), eff(rng), std::log(sigma);
    std::vector<std::vector<std::size_t>> levels;
    std::vector<int> y;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto l = data.levels(i);
      levels.emplace_back(l.begin(), l.end());
      y.push_back(data.response(i));
    }
    const double want = oracle::trapezoid_marginal(spec, p, levels, y, sigma, 100000);
    const double got = marginal_loglik(spec, p, data, gauss_hermite(15, true)).value;
    worst = std::max(worst, std::abs(got - want));
    worst31 = std::max(worst31, std::abs(marginal_loglik(spec, p, data, gauss_hermite(31, true)).value - want));
  }
  const auto c = random_case(77);
  const auto spec = with_random_intercept(c.spec, true);
  const ModelData data(c.ds, spec);
  Eigen::VectorXd p(c.params.size() + 1);
  p << c.params, std::log(1e-6);
  const double limit = std::abs(marginal_loglik(spec, p, data, gauss_hermite(15, true)).value -
                                loglik_fixed(c.spec, c.params, data).value);
  return {worst < 1e-8 && limit < 1e-6,
          "max |AGH15 - trapezoid| " + fmt("%.2e", worst) + " (AGH31 " + fmt("%.2e", worst31) + "), sigma->0 gap " + fmt("%.2e", limit)};
}

Outcome criterion3() {
  double min_lambda = INFINITY, min_raw = INFINITY, worst_add = 0.0, worst_tail = 0.0;
  int pairs = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    SyntheticModel m;
    m.formulations = {"F1", "F2", "F3", "F4"};
    m.attributes = {"A", "B"};
    m.cutpoints = {-2.0, -0.7, 0.7, 2.0};
    m.formulation_effects = {0.0, -0.6, 0.4, -1.0};
    m.attribute_effects = {0.0, 0.3};
    m.sigma_u = 0.4 * static_cast<double>(s);
    const auto ds = simulate_schedule(m, oracle::complete_schedule(60, 4), 3000 + s);
    const std::vector<ModelSpec> chain{
        make_spec(ds, {}, {Factor::formulation}, OddsStructure::proportional, false),
        make_spec(ds, {}, {Factor::formulation, Factor::attribute}, OddsStructure::proportional, false),
        make_spec(ds, {}, {Factor::formulation, Factor::attribute}, OddsStructure::proportional, true),
        make_spec(ds, {}, {Factor::formulation, Factor::attribute}, OddsStructure::non_proportional, true)};
    std::vector<FittedModel> fits;
    for (const auto& spec : chain) fits.push_back(fit_model(spec, ModelData(ds, spec)));
    for (std::size_t i = 0; i < fits.size(); ++i) {
      for (std::size_t j = i + 1; j < fits.size(); ++j) {
        if (!fits[i].converged() || !fits[j].converged()) continue;
        min_lambda = std::min(min_lambda, lrt(fits[i], fits[j]).statistic);
        min_raw = std::min(min_raw, -2.0 * (fits[i].loglik - fits[j].loglik));
        ++pairs;
      }
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < fits.size(); ++i) sum += lrt(fits[i], fits[i + 1]).statistic;
    worst_add = std::max(worst_add, std::abs(lrt(fits.front(), fits.back()).statistic - sum));
  }
  for (double df = 1; df <= 60; df += 1) {
    for (double x = 0.01; x < 250; x *= 1.37) {
      worst_tail = std::max(worst_tail, std::abs(stats::chi2_sf(x, df) - oracle::chi2_sf(x, df)));
    }
  }
  return {min_lambda >= 0.0 && worst_add < 1e-6 && worst_tail < 1e-10,
          "min Lambda " + fmt("%.3g", min_lambda) + " (raw " + fmt("%.2g", min_raw) + ") over " +
              std::to_string(pairs) + " pairs, additivity gap " +
              fmt("%.2e", worst_add) + ", chi2 tail gap " + fmt("%.2e", worst_tail)};
}

Outcome criterion4() {
  const auto fit = oracle::reference_fit();
  const auto p = conditional_probs(fit, "F4", "body", 0.0);
  const double cum = p[0] + p[1];
  return {std::abs(cum - 0.1131) <= 5e-4, "P = " + fmt("%.6f", cum) + " (target 0.1131)"};
}

Outcome criterion5() {
  const auto fit = oracle::reference_fit();
  const auto scores = acceptance_score(fit);
  bool ok = true;
  std::string detail = "spearman";
  for (const auto& [attr, reference] : oracle::kAcceptance) {
    const auto a = static_cast<std::size_t>(
        std::find(scores.attributes.begin(), scores.attributes.end(), attr) - scores.attributes.begin());
    std::vector<double> ours;
    for (std::size_t f = 0; f < scores.formulations.size(); ++f) ours.push_back(scores.per_attribute[f][a]);
    const double rho = oracle::spearman(ours, reference);
    ok = ok && rho >= 0.90;
    detail += " " + attr + "=" + fmt("%.3f", rho);
  }
  const auto r = rank_formulations(scores);
  const std::set<std::string> top{r[0].formulation, r[1].formulation, r[2].formulation};
  ok = ok && top == std::set<std::string>{"F4", "F6", "F13"} && r.back().formulation == "F7";
  detail += "; top3 " + r[0].formulation + "," + r[1].formulation + "," + r[2].formulation + "; worst " +
            r.back().formulation;
  return {ok, detail};
}

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = design::validate_bibd(13, 130, 4, 40);
  const auto layout = design::generate_bibd(7, 3, 1);
  // Exhaustive pair count straight from the blocks.
  std::vector<std::vector<int>> pair(7, std::vector<int>(7, 0));
  std::vector<int> rep(7, 0);
  for (const auto& b : layout.blocks) {
    for (int x : b) {
      ++rep[x];
      for (int y : b) {
        if (x != y) ++pair[x][y];
      }
    }
  }
  bool balanced = true;
  for (int i = 0; i < 7; ++i) {
    balanced = balanced && rep[i] == layout.params.r;
    for (int j = 0; j < 7; ++j) balanced = balanced && (i == j || pair[i][j] == layout.params.lambda);
  }
  const double secs = seconds_since(t0);
  return {p.lambda == 10 && balanced && design::is_balanced(layout) && secs < 5.0,
          "lambda(13,130,4,40) = " + std::to_string(p.lambda) + ", (7,3) design b=" +
              std::to_string(layout.params.b) + " lambda=" + std::to_string(layout.params.lambda) +
              (balanced ? " balanced" : " UNBALANCED") + ", " + fmt("%.2f", secs) + " s"};
}

Outcome criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ScenarioSpec> scenarios;
  for (const auto& p : standard_patterns()) {
    ScenarioSpec s;
    s.pattern = p;
    scenarios.push_back(s);
  }
  const auto report = concordance_study(scenarios);
  bool ok = true;
  std::ostringstream detail;
  for (const auto& s : report.scenarios) {
    const double u = s.rate(kUnified), a = s.rate(kAttributeA), b = s.rate(kAttributeB);
    const bool strict = s.pattern.find('=') == std::string::npos;
    const bool all_equal = std::count(s.pattern.begin(), s.pattern.end(), '=') == 2;
    bool row = std::abs(u - a) <= 0.15 && std::abs(u - b) <= 0.15;
    if (strict) row = row && u >= 0.95;
    if (all_equal) row = row && u >= 0.70 && u <= 0.95;
    ok = ok && row;
    std::printf("  %-10s unified %.3f  A %.3f  B %.3f  failures %zu/%zu/%zu %s\n", s.pattern.c_str(), u, a, b,
                s.failures[0], s.failures[1], s.failures[2], row ? "" : "<-- outside bounds");
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 1200.0;
  detail << "13 scenarios x 200 replicates at N=90, " << report.total_failures() << " failed fits of "
         << report.total_fits() << ", " << fmt("%.0f", secs) << " s";
  return {ok, detail.str()};
}

Outcome criterion8() {
  ScenarioSpec s;
  s.pattern = "F3<F1<F2";
  s.panellists = 300;
  s.sigma_u = 1.5;
  s.attribute_effect = 0.5;
  s.master_seed = 8;
  const auto ds = simulate_dataset(s, 0);
  const auto spec = make_spec(ds, {"F1", "A"}, {Factor::formulation, Factor::attribute}, OddsStructure::proportional, true);
  const ModelData data(ds, spec);
  const auto fit = fit_model(spec, data);
  const auto truth = s.true_params();
  const auto se = fit.standard_errors();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) worst = std::max(worst, std::abs(fit.params(i) - truth(i)) / se(i));
  const auto ci = profile_ci_sigma(fit, data);
  const bool covers = ci.lower <= 1.5 && 1.5 <= ci.upper;
  return {fit.converged() && worst <= 3.0 && covers,
          "max |estimate - truth| / SE = " + fmt("%.2f", worst) + ", sigma_u " + fmt("%.3f", fit.sigma_u()) +
              " CI (" + fmt("%.3f", ci.lower) + ", " + fmt("%.3f", ci.upper) + ")"};
}

Outcome criterion9() {
  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::uniform_int_distribution<int> dim(2, 13), cnt(1, 50);
    Eigen::MatrixXd m(dim(rng), std::uniform_int_distribution<int>(2, 9)(rng));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = cnt(rng);
    }
    const auto ca = correspondence_analysis(m);
    worst = std::max(worst, std::abs(ca.total_inertia * ca.n - chisq_association(m).statistic));
  }
  Eigen::MatrixXd prop(3, 4);
  prop << 2, 4, 6, 8, 1, 2, 3, 4, 5, 10, 15, 20;
  const double degenerate = correspondence_analysis(prop).total_inertia;
  return {worst < 1e-8 && degenerate == 0.0,
          "max |inertia*n - chi2| " + fmt("%.2e", worst) + ", proportional-row inertia " + fmt("%.1e", degenerate)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same_outputs(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) names.insert(e.path().filename().string());
  for (const auto& n : names) {
    if (n == "metadata.json") continue;
    if (!fs::exists(a / n) || !fs::exists(b / n) || slurp(a / n) != slurp(b / n)) {
      why = n;
      return false;
    }
  }
  return true;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SENSILOGIT_CLI + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome criterion10() {
  const fs::path work = SENSILOGIT_WORK_DIR;
  fs::remove_all(work);
  fs::create_directories(work);
  std::ofstream(work / "synth.json") << R"({"out": "synth", "simulate": {"dataset": {
      "attributes": ["aroma", "body", "sweetness"], "block_size": 3, "multiplier": 4,
      "cutpoints": [-2.0, -0.7, 0.7, 2.0], "formulation_effects": [0, -0.8, 0.4, -1.2, 0.1, -0.5, 0.3],
      "sigma_u": 1.2}}})";
  std::ofstream(work / "study.json") << R"({"simulate": {"scenarios": ["F1<F3<F2", "F1=F2=F3"], "replicates": 3}})";
  std::ofstream(work / "fit.json") << R"({"data": {"path": "synth/data.csv"}})";
  bool ok = true;
  std::string why;
  const std::string q = "\"" + work.string() + "/";
  ok = ok && run_cli("simulate --config " + q + "synth.json\" --seed 11 --out " + q + "s1\"") == 0;
  ok = ok && run_cli("simulate --config " + q + "synth.json\" --seed 11 --out " + q + "s2\"") == 0;
  ok = ok && same_outputs(work / "s1", work / "s2", why);
  fs::create_directories(work / "synth");
  if (ok) fs::copy_file(work / "s1" / "data.csv", work / "synth" / "data.csv", fs::copy_options::overwrite_existing);
  ok = ok && run_cli("fit --config " + q + "fit.json\" --seed 5 --out " + q + "f1\"") == 0;
  ok = ok && run_cli("fit --config " + q + "fit.json\" --seed 5 --out " + q + "f2\"") == 0;
  ok = ok && same_outputs(work / "f1", work / "f2", why);
  ok = ok && run_cli("simulate --config " + q + "study.json\" --seed 3 --out " + q + "c1\"") == 0;
  ok = ok && run_cli("simulate --config " + q + "study.json\" --seed 3 --out " + q + "c2\"") == 0;
  ok = ok && same_outputs(work / "c1", work / "c2", why);
  return {ok, ok ? "simulate (dataset and study) and fit outputs byte-identical across reruns"
                 : "mismatch or failure" + (why.empty() ? std::string() : " in " + why)};
}

}  // namespace

// Optional arguments select criteria by number; all run by default.
int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  int failed = 0;
  std::set<std::size_t> only;
  for (int a = 1; a < argc; ++a) only.insert(static_cast<std::size_t>(std::atoi(argv[a])));
  std::size_t ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    ++ran;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu: %s %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(ran) - failed, ran);
  return failed == 0 ? 0 : 1;
}
