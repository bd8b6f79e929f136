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
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "json.hpp"
#include "purelm/ensemble.hpp"
#include "purelm/lm.hpp"
#include "purelm/rng.hpp"
#include "purelm/serialize.hpp"

namespace purelm {

// Near-access-free accounting. Everything here is in bits (base 2) so the
// event bound reads p(E) <= 2^((1+eps)k) * p_s(E) + delta directly.
//
// The quantities per decode step, for ensemble distribution p and members
// p_l / p_s:
//
//   Z   = sum_y sqrt(p_l(y) p_s(y))        (Bhattacharyya coefficient)
//   H^2 = 1 - Z                            (squared Hellinger distance)
//   k_bound = 2 log2(1 / Z)
//
// For the equal-weight geometric ensemble p = sqrt(p_l p_s) / Z the chain
//   KL(p||p_l) + KL(p||p_s) = 2 log2(1 / Z)
// holds exactly, so k_bound dominates both divergences. For general
// weights the directly computed max KL is the certificate and the Z-based
// value is informational.

inline constexpr double kInfiniteCertificateBits = std::numeric_limits<double>::infinity();

// sum_i p_i log2(p_i / q_i), with 0 log 0 := 0. Requires q to cover p's
// support.
inline double kl_divergence_bits(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) throw IntegrityError("kl_divergence_bits: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw std::domain_error("kl_divergence_bits: support violation");
    sum += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  double bits = sum / std::numbers::ln2;
  return bits < 0.0 ? 0.0 : bits;  // clamp tiny negative rounding residue
}

struct PartitionResult {
  double z;   // Bhattacharyya coefficient, in (0, 1] for overlapping supports
  double h2;  // squared Hellinger distance, 1 - z
};

inline PartitionResult bhattacharyya_partition(const ProbVector& p_l, const ProbVector& p_s) {
  if (p_l.size() != p_s.size()) throw IntegrityError("bhattacharyya_partition: length mismatch");
  double z = 0.0;
  for (std::size_t i = 0; i < p_l.size(); ++i) z += std::sqrt(p_l[i] * p_s[i]);
  if (z > 1.0) z = 1.0;  // rounding guard
  return PartitionResult{z, 1.0 - z};
}

// 2 log2(1/Z). Disjoint supports (Z = 0) yield the infinite-certificate
// sentinel rather than an error; smoothing normally rules that out.
inline double naf_step_bound(const ProbVector& p_l, const ProbVector& p_s) {
  double z = bhattacharyya_partition(p_l, p_s).z;
  if (z == 0.0) return kInfiniteCertificateBits;
  double k = -2.0 * std::log2(z);
  return k < 0.0 ? 0.0 : k;
}

struct ConcentrationPoint {
  double eps;
  double delta;
};

struct ConcentrationEstimate {
  double mean = 0.0;
  std::vector<ConcentrationPoint> points;
};

// Empirical (eps, delta)-concentration of the log-ratio samples: delta-hat is
// the fraction of samples outside the closed interval (1 +- eps) * mean.
inline ConcentrationEstimate estimate_concentration(std::span<const double> y_samples,
                                                    std::span<const double> eps_grid) {
  if (y_samples.empty()) throw std::domain_error("estimate_concentration: no samples");
  ConcentrationEstimate est;
  double sum = 0.0;
  for (double y : y_samples) sum += y;
  est.mean = sum / static_cast<double>(y_samples.size());
  for (double eps : eps_grid) {
    double lo = std::min((1.0 - eps) * est.mean, (1.0 + eps) * est.mean);
    double hi = std::max((1.0 - eps) * est.mean, (1.0 + eps) * est.mean);
    std::size_t outside = 0;
    for (double y : y_samples)
      if (y < lo || y > hi) ++outside;
    est.points.push_back(
        ConcentrationPoint{eps, static_cast<double>(outside) / static_cast<double>(y_samples.size())});
  }
  return est;
}

// ---------------------------------------------------------------------------
// Per-generation ledger
// ---------------------------------------------------------------------------

struct LedgerRow {
  std::size_t step = 0;
  double z = 1.0;
  double h2 = 0.0;
  double kl_pl_bits = 0.0;
  double kl_ps_bits = 0.0;
  double k_bound_bits = 0.0;
};

inline LedgerRow make_ledger_row(std::size_t step, const StepDistributions& d) {
  LedgerRow row;
  row.step = step;
  PartitionResult part = bhattacharyya_partition(d.p_l, d.p_s);
  row.z = part.z;
  row.h2 = part.h2;
  row.kl_pl_bits = kl_divergence_bits(d.p, d.p_l);
  row.kl_ps_bits = kl_divergence_bits(d.p, d.p_s);
  row.k_bound_bits = part.z == 0.0 ? kInfiniteCertificateBits : -2.0 * std::log2(part.z);
  if (row.k_bound_bits < 0.0) row.k_bound_bits = 0.0;
  return row;
}

struct DivergenceLedger {
  std::vector<LedgerRow> rows;
  std::vector<double> y_bits;
  // Per-step sums along the sampled trajectory (the chain-rule upper bound
  // for the sequence-level divergence).
  double cum_k_bound_bits = 0.0;
  double cum_kl_pl_bits = 0.0;
  double cum_kl_ps_bits = 0.0;
  ConcentrationEstimate concentration;

  void add(const LedgerRow& row) {
    rows.push_back(row);
    cum_k_bound_bits += row.k_bound_bits;
    cum_kl_pl_bits += row.kl_pl_bits;
    cum_kl_ps_bits += row.kl_ps_bits;
  }

  // The certificate for general weights: the larger of the two directly
  // computed cumulative divergences.
  double cum_max_kl_bits() const { return std::max(cum_kl_pl_bits, cum_kl_ps_bits); }

  static nlohmann::json json_real(double v) {
    if (std::isfinite(v)) return v;
    return "inf";
  }

  nlohmann::json row_json(const LedgerRow& r) const {
    return nlohmann::json{{"step", r.step},
                          {"Z", r.z},
                          {"H2", r.h2},
                          {"kl_pl_bits", r.kl_pl_bits},
                          {"kl_ps_bits", r.kl_ps_bits},
                          {"k_bound_bits", json_real(r.k_bound_bits)}};
  }

  nlohmann::json summary_json() const {
    nlohmann::json eps_delta = nlohmann::json::array();
    for (const auto& pt : concentration.points)
      eps_delta.push_back({{"eps", pt.eps}, {"delta", pt.delta}});
    return nlohmann::json{{"cum_k_bound", json_real(cum_k_bound_bits)},
                          {"cum_kl_pl_bits", cum_kl_pl_bits},
                          {"cum_kl_ps_bits", cum_kl_ps_bits},
                          {"cum_max_kl_bits", cum_max_kl_bits()},
                          {"mean_Y", concentration.mean},
                          {"eps_delta_table", eps_delta}};
  }
};

inline constexpr double kDefaultEpsGrid[] = {0.1, 0.25, 0.5, 1.0};

// Replays a recorded generation through both members and rebuilds the
// per-step distributions; the record itself only stores chosen-token values.
inline DivergenceLedger certify_generation(const LanguageModel& lm_l, const LanguageModel& lm_s,
                                           const GenerationRecord& record,
                                           std::span<const double> eps_grid = kDefaultEpsGrid) {
  if (record.output.size() != record.y_bits.size() ||
      record.output.size() != record.logp_p.size())
    throw IntegrityError("certify_generation: per-step arrays do not match the output length");
  DivergenceLedger ledger;
  TokenSequence history = record.prompt;
  for (std::size_t step = 0; step < record.output.size(); ++step) {
    StepDistributions dists = ensemble_step(lm_l, lm_s, make_context(history), record.spec, step);
    ledger.add(make_ledger_row(step, dists));
    history.push_back(record.output[step]);
  }
  ledger.y_bits = record.y_bits;
  if (!ledger.y_bits.empty())
    ledger.concentration = estimate_concentration(ledger.y_bits, eps_grid);
  return ledger;
}

// ---------------------------------------------------------------------------
// Exhaustive event-bound verification
// ---------------------------------------------------------------------------

// Next-token distribution of a sequence model, keyed by the realized prefix.
using SequenceDistFn = std::function<ProbVector(const TokenSequence& prefix)>;

struct EventBoundReport {
  std::size_t vocab_size = 0;
  std::size_t horizon = 0;
  std::size_t n_outcomes = 0;   // |V|^L
  std::size_t n_events = 0;     // events actually checked
  bool exhaustive = false;      // all 2^n_outcomes events vs sampled events
  double k_bits = 0.0;          // exact E[Y] = KL(p||p_s) over whole sequences
  double epsilon = 0.0;
  double delta = 0.0;           // exact Pr[Y outside (1 +- eps) k]
  double max_violation = 0.0;   // max over events of p(E) - (2^((1+eps)k) ps(E) + delta)
};

namespace detail {

inline void enumerate_outcomes(const SequenceDistFn& next, std::size_t vocab_size,
                               std::size_t horizon, TokenSequence& prefix, double prob,
                               std::vector<double>& out) {
  if (prefix.size() == horizon) {
    out.push_back(prob);
    return;
  }
  ProbVector p = next(prefix);
  if (p.size() != vocab_size)
    throw IntegrityError("verify_event_bound: distribution size mismatch");
  for (TokenId y = 0; y < vocab_size; ++y) {
    prefix.push_back(y);
    enumerate_outcomes(next, vocab_size, horizon, prefix, prob * p[y], out);
    prefix.pop_back();
  }
}

}  // namespace detail

// Checks the lemma p(E) <= 2^((1+eps)k) * p_s(E) + delta over the full
// outcome space |V|^L: every event when the space is tiny, singletons plus
// seeded random events otherwise. k and delta are computed exactly from the
// enumerated distribution, not estimated.
inline EventBoundReport verify_event_bound(const SequenceDistFn& ensemble,
                                           const SequenceDistFn& benign, std::size_t vocab_size,
                                           std::size_t horizon, double epsilon,
                                           std::size_t enumeration_cap = 4096,
                                           std::uint64_t seed = 0) {
  if (vocab_size < 1 || horizon < 1)
    throw ConfigError("verify_event_bound: vocab_size and horizon must be >= 1");
  double n_out_f = std::pow(static_cast<double>(vocab_size), static_cast<double>(horizon));
  if (n_out_f > static_cast<double>(enumeration_cap))
    throw ConfigError("verify_event_bound: |V|^L exceeds the enumeration cap");
  const std::size_t n_out = static_cast<std::size_t>(n_out_f + 0.5);

  std::vector<double> p_mass, ps_mass;
  p_mass.reserve(n_out);
  ps_mass.reserve(n_out);
  TokenSequence prefix;
  detail::enumerate_outcomes(ensemble, vocab_size, horizon, prefix, 1.0, p_mass);
  detail::enumerate_outcomes(benign, vocab_size, horizon, prefix, 1.0, ps_mass);

  EventBoundReport report;
  report.vocab_size = vocab_size;
  report.horizon = horizon;
  report.n_outcomes = n_out;
  report.epsilon = epsilon;

  // Exact E[Y] over whole sequences; outcomes with p = 0 contribute nothing.
  std::vector<double> y(n_out, 0.0);
  for (std::size_t i = 0; i < n_out; ++i) {
    if (p_mass[i] == 0.0) continue;
    if (ps_mass[i] == 0.0) {
      report.k_bits = kInfiniteCertificateBits;
      y[i] = kInfiniteCertificateBits;
      continue;
    }
    y[i] = std::log2(p_mass[i] / ps_mass[i]);
    if (std::isfinite(report.k_bits)) report.k_bits += p_mass[i] * y[i];
  }
  if (report.k_bits < 0.0) report.k_bits = 0.0;

  double lo = std::min((1.0 - epsilon) * report.k_bits, (1.0 + epsilon) * report.k_bits);
  double hi = std::max((1.0 - epsilon) * report.k_bits, (1.0 + epsilon) * report.k_bits);
  for (std::size_t i = 0; i < n_out; ++i) {
    if (p_mass[i] > 0.0 && (y[i] < lo || y[i] > hi)) report.delta += p_mass[i];
  }

  const double factor = std::pow(2.0, (1.0 + epsilon) * report.k_bits);
  report.max_violation = -std::numeric_limits<double>::infinity();
  auto check_event = [&](const std::vector<bool>& in_event) {
    double pe = 0.0, pse = 0.0;
    for (std::size_t i = 0; i < n_out; ++i) {
      if (in_event[i]) {
        pe += p_mass[i];
        pse += ps_mass[i];
      }
    }
    // With pse = 0 the bound degenerates to p(E) <= delta; this also keeps
    // an infinite factor from producing inf * 0.
    double rhs = pse == 0.0 ? report.delta : factor * pse + report.delta;
    double violation = pe - rhs;
    if (violation > report.max_violation) report.max_violation = violation;
  };

  std::vector<bool> event(n_out, false);
  if (n_out <= 9) {
    report.exhaustive = true;
    const std::size_t n_events = static_cast<std::size_t>(1) << n_out;
    for (std::size_t mask = 0; mask < n_events; ++mask) {
      for (std::size_t i = 0; i < n_out; ++i) event[i] = (mask >> i) & 1;
      check_event(event);
    }
    report.n_events = n_events;
  } else {
    report.exhaustive = false;
    for (std::size_t i = 0; i < n_out; ++i) {
      std::fill(event.begin(), event.end(), false);
      event[i] = true;
      check_event(event);
    }
    Rng rng(seed);
    const std::size_t n_random = 10000;
    for (std::size_t e = 0; e < n_random; ++e) {
      for (std::size_t i = 0; i < n_out; ++i) event[i] = rng.next_bool();
      check_event(event);
    }
    report.n_events = n_out + n_random;
  }
  return report;
}

// Adapts a (model pair, spec) to the sequence-distribution view used by the
// verifier: prefix in, next-step ensemble distribution out.
inline SequenceDistFn ensemble_sequence_fn(const LanguageModel& lm_l, const LanguageModel& lm_s,
                                           EnsembleSpec spec) {
  return [&lm_l, &lm_s, spec](const TokenSequence& prefix) {
    return ensemble_step(lm_l, lm_s, make_context(prefix), spec, prefix.size()).p;
  };
}

inline SequenceDistFn model_sequence_fn(const LanguageModel& m, double member_temperature = 1.0,
                                        double sampling_temperature = 1.0) {
  return [&m, member_temperature, sampling_temperature](const TokenSequence& prefix) {
    return model_distribution(m, make_context(prefix), member_temperature, sampling_temperature);
  };
}

}  // namespace purelm
