// Copyright 2026 The Purelm Authors
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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "purelm/lm.hpp"
#include "purelm/logits.hpp"
#include "purelm/rng.hpp"

namespace purelm {

// Logit-level purification: each step combines the untrusted member with the
// benign member as
//
//   p_step = softmax((alpha_t * z_l / T_l + beta_t * z_s / T_s) / T)
//
// i.e. member temperatures are applied to member logits first, the per-step
// weights mix the scaled logits, and the sampling temperature T is applied
// after combination. For alpha + beta = 1 this is the normalized weighted
// geometric mean of the member distributions; alpha = 1 reproduces the
// untrusted member at temperature T_l * T, alpha = 0 the benign member at
// T_s * T.

// Piecewise-constant per-step weight trajectory. "0:1.0,2:0.0" holds 1.0 for
// steps 0-1 and 0.0 afterwards.
class AlphaSchedule {
 public:
  static AlphaSchedule constant(double value) {
    return piecewise({{0, value}});
  }

  static AlphaSchedule piecewise(std::vector<std::pair<std::size_t, double>> points) {
    if (points.empty()) throw ConfigError("AlphaSchedule: no points");
    if (points.front().first != 0) throw ConfigError("AlphaSchedule: first point must be step 0");
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (points[i].first <= points[i - 1].first)
        throw ConfigError("AlphaSchedule: steps must be strictly increasing");
    }
    for (auto [step, value] : points) {
      if (!(value >= 0.0 && value <= 1.0))
        throw ConfigError("AlphaSchedule: weights must lie in [0, 1]");
    }
    AlphaSchedule s;
    s.points_ = std::move(points);
    return s;
  }

  double at(std::size_t step) const {
    double value = points_.front().second;
    for (const auto& [from, v] : points_) {
      if (from > step) break;
      value = v;
    }
    return value;
  }

  bool is_constant() const { return points_.size() == 1; }
  const std::vector<std::pair<std::size_t, double>>& points() const { return points_; }

  std::string to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (i) os << ",";
      os << points_[i].first << ":" << points_[i].second;
    }
    return os.str();
  }

  static AlphaSchedule parse(const std::string& text) {
    std::vector<std::pair<std::size_t, double>> points;
    std::istringstream is(text);
    std::string part;
    while (std::getline(is, part, ',')) {
      auto colon = part.find(':');
      if (colon == std::string::npos)
        throw ConfigError("AlphaSchedule: expected step:value, got '" + part + "'");
      points.emplace_back(std::stoull(part.substr(0, colon)), std::stod(part.substr(colon + 1)));
    }
    return piecewise(std::move(points));
  }

 private:
  std::vector<std::pair<std::size_t, double>> points_;
};

struct EnsembleSpec {
  AlphaSchedule alpha = AlphaSchedule::constant(0.5);
  // beta defaults to 1 - alpha; an explicit schedule overrides that.
  std::optional<AlphaSchedule> beta;
  double temp_untrusted = 1.0;  // T_l
  double temp_benign = 1.0;     // T_s
  double temp_sampling = 1.0;   // T
  std::size_t max_length = 64;
  bool greedy = false;
  std::uint64_t seed = 0;

  double alpha_at(std::size_t step) const { return alpha.at(step); }
  double beta_at(std::size_t step) const {
    return beta ? beta->at(step) : 1.0 - alpha.at(step);
  }

  void validate() const {
    if (!(temp_untrusted > 0.0) || !(temp_benign > 0.0) || !(temp_sampling > 0.0))
      throw ConfigError("EnsembleSpec: temperatures must be > 0");
    if (max_length == 0) throw ConfigError("EnsembleSpec: max_length must be >= 1");
    // Piecewise regions of alpha and beta combined: alpha + beta must not
    // vanish anywhere.
    std::vector<std::size_t> steps;
    for (auto& [from, v] : alpha.points()) steps.push_back(from);
    if (beta)
      for (auto& [from, v] : beta->points()) steps.push_back(from);
    for (std::size_t s : steps) {
      if (!(alpha_at(s) + beta_at(s) > 0.0))
        throw ConfigError("EnsembleSpec: alpha + beta must be > 0 at every step");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"alpha", alpha.to_string()},
                     {"temp_untrusted", temp_untrusted},
                     {"temp_benign", temp_benign},
                     {"temp_sampling", temp_sampling},
                     {"max_length", max_length},
                     {"greedy", greedy},
                     {"seed", seed}};
    if (beta) j["beta"] = beta->to_string();
    return j;
  }

  static EnsembleSpec from_json(const nlohmann::json& j) {
    EnsembleSpec spec;
    spec.alpha = AlphaSchedule::parse(j.at("alpha").get<std::string>());
    if (j.contains("beta")) spec.beta = AlphaSchedule::parse(j.at("beta").get<std::string>());
    spec.temp_untrusted = j.at("temp_untrusted").get<double>();
    spec.temp_benign = j.at("temp_benign").get<double>();
    spec.temp_sampling = j.at("temp_sampling").get<double>();
    spec.max_length = j.at("max_length").get<std::size_t>();
    spec.greedy = j.at("greedy").get<bool>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
  }
};

// alpha * z_l + beta * z_s, no normalization (softmax happens downstream).
inline LogitVector combine_logits(const LogitVector& z_l, const LogitVector& z_s, double alpha,
                                  double beta) {
  if (z_l.size() != z_s.size()) throw IntegrityError("combine_logits: length mismatch");
  if (!std::isfinite(alpha) || !std::isfinite(beta))
    throw std::domain_error("combine_logits: weights must be finite");
  LogitVector out(z_l.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * z_l[i] + beta * z_s[i];
  return out;
}

// One decode step: the ensemble distribution plus both members' own
// distributions at the same sampling temperature (the comparators the
// certificates are measured against).
struct StepDistributions {
  ProbVector p;    // ensemble
  ProbVector p_l;  // untrusted member decoding alone
  ProbVector p_s;  // benign member decoding alone
};

inline StepDistributions ensemble_step(const LanguageModel& lm_l, const LanguageModel& lm_s,
                                       Context ctx, const EnsembleSpec& spec, std::size_t step) {
  if (lm_l.vocab().digest() != lm_s.vocab().digest())
    throw ConfigError("ensemble: members do not share a vocabulary");
  LogitVector z_l = lm_l.next_logits(ctx);
  LogitVector z_s = lm_s.next_logits(ctx);
  for (double& v : z_l) v /= spec.temp_untrusted;
  for (double& v : z_s) v /= spec.temp_benign;
  StepDistributions out;
  out.p = softmax_with_temperature(combine_logits(z_l, z_s, spec.alpha_at(step), spec.beta_at(step)),
                                   spec.temp_sampling);
  out.p_l = softmax_with_temperature(z_l, spec.temp_sampling);
  out.p_s = softmax_with_temperature(z_s, spec.temp_sampling);
  return out;
}

inline ProbVector ensemble_next_distribution(const LanguageModel& lm_l, const LanguageModel& lm_s,
                                             Context ctx, const EnsembleSpec& spec,
                                             std::size_t step) {
  return ensemble_step(lm_l, lm_s, ctx, spec, step).p;
}

// One decode session's trace: everything the metric and certificate layers
// consume.
struct GenerationRecord {
  TokenSequence prompt;
  TokenSequence output;
  std::vector<double> logp_p;  // chosen-token log-prob under the ensemble, nats
  std::vector<double> logp_l;  // ... under the untrusted member
  std::vector<double> logp_s;  // ... under the benign member
  std::vector<double> y_bits;  // log2(p(y)/p_s(y)) per step
  std::uint64_t seed = 0;
  EnsembleSpec spec;

  nlohmann::json to_json() const {
    return nlohmann::json{{"prompt_ids", prompt}, {"output_ids", output}, {"logp_p", logp_p},
                          {"logp_l", logp_l},     {"logp_s", logp_s},     {"y_bits", y_bits},
                          {"seed", seed},         {"spec", spec.to_json()}};
  }

  static GenerationRecord from_json(const nlohmann::json& j) {
    GenerationRecord r;
    r.prompt = j.at("prompt_ids").get<TokenSequence>();
    r.output = j.at("output_ids").get<TokenSequence>();
    r.logp_p = j.at("logp_p").get<std::vector<double>>();
    r.logp_l = j.at("logp_l").get<std::vector<double>>();
    r.logp_s = j.at("logp_s").get<std::vector<double>>();
    r.y_bits = j.at("y_bits").get<std::vector<double>>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.spec = EnsembleSpec::from_json(j.at("spec"));
    return r;
  }
};

inline TokenId argmax_token(const ProbVector& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return static_cast<TokenId>(best);
}

// Observer hook for callers that want the full per-step distributions (the
// sweep accumulates certificate rows this way without a second decode pass).
using StepObserver = std::function<void(std::size_t step, const StepDistributions& dists,
                                        TokenId chosen)>;

// Autoregressive sampling until EOS or max length. Deterministic given the
// spec seed; greedy mode ignores the RNG entirely.
inline GenerationRecord sample_sequence(const LanguageModel& lm_l, const LanguageModel& lm_s,
                                        const TokenSequence& prompt, const EnsembleSpec& spec,
                                        const StepObserver& observer = nullptr) {
  spec.validate();
  GenerationRecord rec;
  rec.prompt = prompt;
  rec.seed = spec.seed;
  rec.spec = spec;
  Rng rng(spec.seed);
  TokenSequence history = prompt;
  for (std::size_t step = 0; step < spec.max_length; ++step) {
    StepDistributions dists = ensemble_step(lm_l, lm_s, make_context(history), spec, step);
    TokenId chosen = spec.greedy ? argmax_token(dists.p)
                                 : static_cast<TokenId>(rng.sample_categorical(dists.p));
    rec.output.push_back(chosen);
    rec.logp_p.push_back(std::log(dists.p[chosen]));
    rec.logp_l.push_back(std::log(dists.p_l[chosen]));
    rec.logp_s.push_back(std::log(dists.p_s[chosen]));
    rec.y_bits.push_back((rec.logp_p.back() - rec.logp_s.back()) / std::numbers::ln2);
    if (observer) observer(step, dists, chosen);
    history.push_back(chosen);
    if (chosen == kEosId) break;
  }
  return rec;
}

}  // namespace purelm
