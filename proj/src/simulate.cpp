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

#include "sensilogit/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <thread>

#include "sensilogit/error.hpp"
#include "sensilogit/format.hpp"
#include "sensilogit/mixed.hpp"
#include "sensilogit/stats.hpp"

namespace sensilogit {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform on [0, 1) from the top 53 bits, so draws do not depend on the
/// standard library's distribution implementations.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int draw_response(std::mt19937_64& rng, const std::vector<double>& eta) {
  const double v = uniform01(rng);
  for (std::size_t k = 0; k < eta.size(); ++k) {
    if (v < stats::logistic(eta[k])) return static_cast<int>(k) + 1;
  }
  return static_cast<int>(eta.size()) + 1;
}

std::string padded(const std::string& prefix, std::size_t index, std::size_t count) {
  const std::string digits = std::to_string(count);
  std::string n = std::to_string(index + 1);
  return prefix + std::string(digits.size() - n.size(), '0') + n;
}

void check_cutpoints(const std::vector<double>& cutpoints) {
  if (cutpoints.empty()) throw_usage("at least one cutpoint is required");
  for (std::size_t k = 0; k < cutpoints.size(); ++k) {
    if (!std::isfinite(cutpoints[k])) throw_usage("cutpoints must be finite");
    if (k > 0 && !(cutpoints[k] > cutpoints[k - 1])) {
      throw_usage("cutpoints must be strictly increasing");
    }
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> parse_pattern(const std::string& pattern) {
  std::vector<std::vector<std::size_t>> groups(1);
  std::set<std::size_t> seen;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw_usage("invalid pattern \"" + pattern + "\": " + why);
  };
  while (i < pattern.size()) {
    if (pattern[i] == ' ') {
      ++i;
      continue;
    }
    if (pattern[i] != 'F') fail("expected F<number> at position " + std::to_string(i + 1));
    std::size_t j = i + 1;
    while (j < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[j]))) ++j;
    if (j == i + 1) fail("missing formulation number");
    const std::size_t k = std::stoul(pattern.substr(i + 1, j - i - 1));
    if (k == 0) fail("formulations are numbered from 1");
    if (!seen.insert(k - 1).second) fail("F" + std::to_string(k) + " appears twice");
    groups.back().push_back(k - 1);
    while (j < pattern.size() && pattern[j] == ' ') ++j;
    if (j == pattern.size()) break;
    if (pattern[j] == '<') {
      groups.emplace_back();
    } else if (pattern[j] != '=') {
      fail(std::string("unexpected '") + pattern[j] + "'");
    }
    i = j + 1;
    if (i == pattern.size()) fail("trailing operator");
  }
  if (seen.empty()) fail("no formulations");
  if (*seen.rbegin() + 1 != seen.size()) fail("formulations must be F1..F" + std::to_string(seen.size()));
  for (auto& g : groups) std::sort(g.begin(), g.end());
  return groups;
}

std::string format_pattern(const std::vector<std::vector<std::size_t>>& groups) {
  std::string out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (g) out += '<';
    for (std::size_t i = 0; i < groups[g].size(); ++i) {
      if (i) out += '=';
      out += 'F' + std::to_string(groups[g][i] + 1);
    }
  }
  return out;
}

std::string canonical_pattern(const std::string& pattern) {
  return format_pattern(parse_pattern(pattern));
}

std::size_t ScenarioSpec::formulations() const {
  std::size_t n = 0;
  for (const auto& g : parse_pattern(pattern)) n += g.size();
  return n;
}

void ScenarioSpec::validate() const {
  const auto groups = parse_pattern(pattern);
  if (formulations() < 2) throw_usage("a scenario needs at least two formulations");
  if (panellists < 1) throw_usage("panellists must be positive");
  if (replicates < 0) throw_usage("replicates must be non-negative");
  if (!(sigma_u >= 0.0) || !std::isfinite(sigma_u)) throw_usage("sigma_u must be >= 0");
  if (!(gap > 0.0) || !std::isfinite(gap)) throw_usage("gap must be positive");
  if (!std::isfinite(attribute_effect)) throw_usage("attribute_effect must be finite");
  check_cutpoints(cutpoints);
}

std::vector<double> ScenarioSpec::formulation_effects() const {
  const auto groups = parse_pattern(pattern);
  std::vector<double> quality(formulations(), 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (auto f : groups[g]) quality[f] = gap * static_cast<double>(g);
  }
  std::vector<double> beta(quality.size());
  for (std::size_t f = 0; f < quality.size(); ++f) beta[f] = quality[0] - quality[f];
  return beta;
}

Eigen::VectorXd ScenarioSpec::true_params() const {
  const auto beta = formulation_effects();
  const std::size_t nc = cutpoints.size();
  Eigen::VectorXd p(static_cast<Eigen::Index>(nc + beta.size() - 1 + 1 + 1));
  Eigen::Index i = 0;
  for (double a : cutpoints) p(i++) = a;
  for (std::size_t f = 1; f < beta.size(); ++f) p(i++) = beta[f];
  p(i++) = attribute_effect;
  p(i) = sigma_u > 0.0 ? std::log(sigma_u) : -30.0;
  return p;
}

std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t substream) {
  std::uint64_t x = splitmix(master_seed);
  x = splitmix(x ^ stream);
  return splitmix(x ^ (substream * 0xd1342543de82ef95ULL));
}

OrdinalDataset simulate_dataset(const ScenarioSpec& scenario, std::size_t replicate_index) {
  scenario.validate();
  const auto beta = scenario.formulation_effects();
  const std::size_t nf = beta.size();
  const auto np = static_cast<std::size_t>(scenario.panellists);
  const std::vector<double> delta{0.0, scenario.attribute_effect};
  std::vector<std::string> fnames;
  for (std::size_t f = 0; f < nf; ++f) fnames.push_back("F" + std::to_string(f + 1));
  std::vector<std::string> pnames;
  for (std::size_t p = 0; p < np; ++p) pnames.push_back(padded("P", p, np));
  std::vector<Observation> obs;
  obs.reserve(np * nf * 2);
  std::vector<double> eta(scenario.cutpoints.size());
  for (std::size_t p = 0; p < np; ++p) {
    std::mt19937_64 rng(stream_seed(scenario.master_seed, replicate_index, p));
    const double u = scenario.sigma_u * standard_normal(rng);
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t k = 0; k < eta.size(); ++k) {
          eta[k] = scenario.cutpoints[k] + beta[f] + delta[a] + u;
        }
        obs.push_back({p, f, a, draw_response(rng, eta)});
      }
    }
  }
  return OrdinalDataset(std::move(obs), HedonicScale::numeric(scenario.categories()),
                        LevelRegistry(fnames), LevelRegistry({"A", "B"}), LevelRegistry(pnames));
}

void SyntheticModel::validate() const {
  check_cutpoints(cutpoints);
  if (formulations.size() < 1 || attributes.size() < 1) {
    throw_usage("synthetic model needs formulations and attributes");
  }
  if (attribute_effects.size() != attributes.size()) {
    throw_usage("attribute_effects must have one entry per attribute");
  }
  if (!(sigma_u >= 0.0) || !std::isfinite(sigma_u)) throw_usage("sigma_u must be >= 0");
  if (formulation_effects_by_cutpoint.empty()) {
    if (formulation_effects.size() != formulations.size()) {
      throw_usage("formulation_effects must have one entry per formulation");
    }
    return;
  }
  if (formulation_effects_by_cutpoint.size() != cutpoints.size()) {
    throw_usage("by-cutpoint formulation effects need one row per cutpoint");
  }
  for (const auto& row : formulation_effects_by_cutpoint) {
    if (row.size() != formulations.size()) {
      throw_usage("by-cutpoint formulation effects need one entry per formulation");
    }
  }
  for (std::size_t f = 0; f < formulations.size(); ++f) {
    for (std::size_t k = 1; k < cutpoints.size(); ++k) {
      if (!(cutpoints[k] + formulation_effects_by_cutpoint[k][f] >
            cutpoints[k - 1] + formulation_effects_by_cutpoint[k - 1][f])) {
        throw_usage("non-monotone cumulative logits for formulation " + formulations[f]);
      }
    }
  }
}

OrdinalDataset simulate_schedule(const SyntheticModel& model,
                                 const std::vector<design::Serving>& schedule,
                                 std::uint64_t seed) {
  model.validate();
  int max_panellist = -1;
  for (const auto& s : schedule) max_panellist = std::max(max_panellist, s.panellist);
  const auto np = static_cast<std::size_t>(max_panellist + 1);
  std::vector<std::string> pnames;
  for (std::size_t p = 0; p < np; ++p) pnames.push_back(padded("P", p, np));
  std::vector<std::mt19937_64> rngs;
  std::vector<double> us;
  for (std::size_t p = 0; p < np; ++p) {
    rngs.emplace_back(stream_seed(seed, p, 0));
    us.push_back(model.sigma_u * standard_normal(rngs.back()));
  }
  const bool by_cut = !model.formulation_effects_by_cutpoint.empty();
  std::vector<Observation> obs;
  std::vector<double> eta(model.cutpoints.size());
  for (const auto& s : schedule) {
    const auto p = static_cast<std::size_t>(s.panellist);
    for (int fi : s.order) {
      const auto f = static_cast<std::size_t>(fi);
      if (f >= model.formulations.size()) throw_usage("schedule names an unknown formulation");
      for (std::size_t a = 0; a < model.attributes.size(); ++a) {
        for (std::size_t k = 0; k < eta.size(); ++k) {
          const double b = by_cut ? model.formulation_effects_by_cutpoint[k][f]
                                  : model.formulation_effects[f];
          eta[k] = model.cutpoints[k] + b + model.attribute_effects[a] + us[p];
        }
        obs.push_back({p, f, a, draw_response(rngs[p], eta)});
      }
    }
  }
  return OrdinalDataset(std::move(obs),
                        HedonicScale::numeric(static_cast<int>(model.cutpoints.size()) + 1),
                        LevelRegistry(model.formulations), LevelRegistry(model.attributes),
                        LevelRegistry(pnames));
}

InferredOrder infer_order(const FittedModel& fit, double alpha_level, int threshold) {
  if (!fit.converged()) throw_numerical("cannot infer an order from a non-converged fit");
  if (!fit.vcov_valid) throw_numerical("cannot infer an order without a covariance matrix");
  const auto ft = fit.spec.term_index(Factor::formulation);
  if (!ft) throw_usage("model has no formulation term");
  const auto at = fit.spec.term_index(Factor::attribute);
  const FactorTerm& fterm = fit.spec.terms[*ft];
  const std::size_t nf = fterm.levels.size();
  const ParamLayout layout(fit.spec);
  const auto np = static_cast<Eigen::Index>(layout.size());

  InferredOrder out;
  out.scores.assign(nf, 0.0);
  out.pair_p.assign(nf, std::vector<double>(nf, 1.0));
  // Linear functionals: score_f ~ value + grad_f . (theta - theta_hat).
  std::vector<Eigen::VectorXd> grads(nf, Eigen::VectorXd::Zero(np));

  if (!at && fterm.odds == OddsStructure::proportional) {
    for (std::size_t f = 0; f < nf; ++f) {
      const auto idx = layout.slope(*ft, 0, f);
      if (!idx) continue;
      out.scores[f] = -fit.params(static_cast<Eigen::Index>(*idx));
      grads[f](static_cast<Eigen::Index>(*idx)) = -1.0;
    }
  } else {
    const std::size_t na = at ? fit.spec.terms[*at].levels.size() : 1;
    auto score = [&](const Eigen::VectorXd& theta, std::size_t f) {
      double sum = 0.0;
      std::vector<std::size_t> levels(fit.spec.terms.size(), 0);
      levels[*ft] = f;
      for (std::size_t a = 0; a < na; ++a) {
        if (at) levels[*at] = a;
        const auto probs = category_probs(fit.spec, theta, levels, 0.0).probs;
        for (int j = threshold; j <= fit.spec.categories; ++j) {
          sum += probs[static_cast<std::size_t>(j - 1)];
        }
      }
      return sum / static_cast<double>(na);
    };
    for (std::size_t f = 0; f < nf; ++f) {
      out.scores[f] = score(fit.params, f);
      for (Eigen::Index i = 0; i < np; ++i) {
        if (layout.log_sigma() && static_cast<std::size_t>(i) == *layout.log_sigma()) continue;
        const double h = 1e-6 * std::max(1.0, std::abs(fit.params(i)));
        Eigen::VectorXd up = fit.params;
        Eigen::VectorXd dn = fit.params;
        up(i) += h;
        dn(i) -= h;
        grads[f](i) = (score(up, f) - score(dn, f)) / (2.0 * h);
      }
    }
  }

  for (std::size_t a = 0; a < nf; ++a) {
    for (std::size_t b = a + 1; b < nf; ++b) {
      const Eigen::VectorXd g = grads[a] - grads[b];
      double var = 0.0;
      for (Eigen::Index i = 0; i < np; ++i) {
        if (g(i) == 0.0) continue;
        for (Eigen::Index j = 0; j < np; ++j) {
          if (g(j) == 0.0) continue;
          var += g(i) * fit.vcov(i, j) * g(j);
        }
      }
      if (!(var > 0.0) || !std::isfinite(var)) {
        throw_numerical("contrast variance unavailable for " + fterm.levels[a] + " vs " +
                        fterm.levels[b]);
      }
      const double p = stats::normal_two_sided_p((out.scores[a] - out.scores[b]) / std::sqrt(var));
      out.pair_p[a][b] = out.pair_p[b][a] = p;
    }
  }

  std::vector<std::size_t> order(nf);
  for (std::size_t f = 0; f < nf; ++f) order[f] = f;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return out.scores[x] < out.scores[y]; });
  out.groups.push_back({order[0]});
  for (std::size_t i = 1; i < nf; ++i) {
    const std::size_t f = order[i];
    bool merge = true;
    for (std::size_t m : out.groups.back()) merge = merge && out.pair_p[m][f] >= alpha_level;
    if (merge) {
      out.groups.back().push_back(f);
    } else {
      out.groups.push_back({f});
    }
  }
  for (auto& g : out.groups) std::sort(g.begin(), g.end());
  // Patterns are written in terms of F1..FT positions of the term levels.
  out.pattern = format_pattern(out.groups);
  return out;
}

double ScenarioReport::rate(std::size_t model) const {
  const std::size_t ok = replicates - failures[model];
  if (ok == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(concordant[model]) / static_cast<double>(ok);
}

double ScenarioReport::sensitivity_rate(std::size_t model) const {
  if (replicates == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(concordant[model]) / static_cast<double>(replicates);
}

std::size_t ConcordanceReport::total_failures() const {
  std::size_t n = 0;
  for (const auto& s : scenarios) n += s.failures[0] + s.failures[1] + s.failures[2];
  return n;
}

std::size_t ConcordanceReport::total_fits() const {
  std::size_t n = 0;
  for (const auto& s : scenarios) n += 3 * s.replicates;
  return n;
}

namespace {

void run_replicate(const ScenarioSpec& scenario, std::size_t r, const StudyOptions& options,
                   ReplicateRecord& rec) {
  rec.replicate = r;
  const OrdinalDataset ds = simulate_dataset(scenario, r);
  auto attempt = [&](std::size_t model, const OrdinalDataset& data, bool with_attribute) {
    try {
      std::vector<Factor> factors{Factor::formulation};
      if (with_attribute) factors.push_back(Factor::attribute);
      const ModelSpec spec = make_spec(data, {"F1", with_attribute ? "A" : ""}, factors,
                                       OddsStructure::proportional, true);
      const FittedModel fit = fit_model(spec, ModelData(data, spec), options.fit);
      rec.inferred[model] = infer_order(fit, options.alpha_level, options.threshold).pattern;
    } catch (const std::exception& e) {
      rec.inferred[model].clear();
      rec.failure[model] = e.what();
    }
  };
  attempt(kUnified, ds, true);
  attempt(kAttributeA, select_attribute(ds, "A"), false);
  attempt(kAttributeB, select_attribute(ds, "B"), false);
}

}  // namespace

ConcordanceReport concordance_study(const std::vector<ScenarioSpec>& scenarios,
                                    const StudyOptions& options) {
  ConcordanceReport report;
  std::vector<std::pair<std::size_t, std::size_t>> work;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    scenarios[s].validate();
    ScenarioReport sr;
    sr.pattern = canonical_pattern(scenarios[s].pattern);
    sr.panellists = scenarios[s].panellists;
    sr.replicates = static_cast<std::size_t>(scenarios[s].replicates);
    sr.records.resize(sr.replicates);
    report.scenarios.push_back(std::move(sr));
    for (std::size_t r = 0; r < static_cast<std::size_t>(scenarios[s].replicates); ++r) {
      work.emplace_back(s, r);
    }
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      const auto [s, r] = work[i];
      run_replicate(scenarios[s], r, options, report.scenarios[s].records[r]);
    }
  };
  std::size_t threads = options.threads > 0 ? static_cast<std::size_t>(options.threads)
                                            : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(work.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& sr : report.scenarios) {
    for (const auto& rec : sr.records) {
      for (std::size_t m = 0; m < 3; ++m) {
        if (rec.inferred[m].empty()) {
          ++sr.failures[m];
        } else if (rec.inferred[m] == sr.pattern) {
          ++sr.concordant[m];
        }
      }
    }
  }
  return report;
}

std::vector<std::string> standard_patterns() {
  return {"F3<F1<F2", "F1<F3<F2", "F2=F3<F1", "F2<F3<F1", "F3<F2<F1",
          "F1=F2=F3", "F1=F2<F3", "F1<F2=F3", "F1<F2<F3", "F2<F1=F3",
          "F2<F1<F3", "F3=F1<F2", "F3<F1=F2"};
}

void write_concordance_csv(std::ostream& out, const ConcordanceReport& report) {
  auto rate = [](double v) { return std::isnan(v) ? std::string("NA") : format_number(v); };
  out << "scenario,N,replicates,unified,attribute_A,attribute_B,failures_unified,failures_A,"
         "failures_B,unified_failures_discordant,attribute_A_failures_discordant,"
         "attribute_B_failures_discordant\n";
  for (const auto& s : report.scenarios) {
    out << s.pattern << ',' << s.panellists << ',' << s.replicates;
    for (std::size_t m = 0; m < 3; ++m) out << ',' << rate(s.rate(m));
    for (std::size_t m = 0; m < 3; ++m) out << ',' << s.failures[m];
    for (std::size_t m = 0; m < 3; ++m) out << ',' << rate(s.sensitivity_rate(m));
    out << '\n';
  }
}

}  // namespace sensilogit
