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

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "purelm/errors.hpp"
#include "purelm/serialize.hpp"
#include "purelm/tokenizer.hpp"

namespace purelm {

// Leak metrics. All of them are verbatim token-level matches: one
// substituted token breaks a k-gram, and near-misses never count.

namespace detail {

// Polynomial rolling hash over token ids.
inline constexpr std::uint64_t kHashBase = 1000003ULL;

inline std::uint64_t hash_power(std::size_t k) {
  std::uint64_t p = 1;
  for (std::size_t i = 0; i < k; ++i) p *= kHashBase;
  return p;
}

// Hashes of every k-gram of `seq`, computed by rolling.
inline std::vector<std::uint64_t> kgram_hashes(const TokenSequence& seq, std::size_t k) {
  std::vector<std::uint64_t> out;
  if (k == 0 || seq.size() < k) return out;
  out.reserve(seq.size() - k + 1);
  const std::uint64_t drop_power = hash_power(k - 1);
  std::uint64_t h = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    h = h * kHashBase + (static_cast<std::uint64_t>(seq[i]) + 1);
    if (i >= k) h -= (static_cast<std::uint64_t>(seq[i - k]) + 1) * drop_power * kHashBase;
    if (i + 1 >= k) out.push_back(h);
  }
  return out;
}

inline bool kgram_equal(const TokenSequence& a, std::size_t ia, const TokenSequence& b,
                        std::size_t ib, std::size_t k) {
  for (std::size_t j = 0; j < k; ++j)
    if (a[ia + j] != b[ib + j]) return false;
  return true;
}

}  // namespace detail

// Number of distinct reference k-grams that occur anywhere in the
// generation. Rolling-hash index with exact confirmation on hash hits.
inline std::size_t kgram_match_count(const TokenSequence& generation,
                                     const TokenSequence& reference, std::size_t k) {
  if (k < 1) throw std::domain_error("kgram_match_count: k must be >= 1");
  if (generation.size() < k || reference.size() < k) return 0;

  auto ref_hashes = detail::kgram_hashes(reference, k);
  // Distinct reference k-grams, represented by their first position.
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> index;
  std::size_t n_distinct = 0;
  for (std::size_t i = 0; i < ref_hashes.size(); ++i) {
    auto& positions = index[ref_hashes[i]];
    bool duplicate = false;
    for (std::size_t prev : positions) {
      if (detail::kgram_equal(reference, prev, reference, i, k)) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      positions.push_back(i);
      ++n_distinct;
    }
  }

  std::set<std::pair<std::uint64_t, std::size_t>> matched;
  auto gen_hashes = detail::kgram_hashes(generation, k);
  for (std::size_t g = 0; g < gen_hashes.size(); ++g) {
    auto it = index.find(gen_hashes[g]);
    if (it == index.end()) continue;
    for (std::size_t rpos : it->second) {
      if (detail::kgram_equal(generation, g, reference, rpos, k))
        matched.emplace(gen_hashes[g], rpos);
    }
    if (matched.size() == n_distinct) break;
  }
  return matched.size();
}

// Length of the longest contiguous common token run. Row-rolling dynamic
// program, O(|gen| * |ref|).
inline std::size_t em_overlap(const TokenSequence& generation, const TokenSequence& reference) {
  if (generation.empty() || reference.empty()) return 0;
  std::vector<std::size_t> prev(reference.size() + 1, 0), cur(reference.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= generation.size(); ++i) {
    for (std::size_t j = 1; j <= reference.size(); ++j) {
      cur[j] = generation[i - 1] == reference[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

inline bool contains_token_run(const TokenSequence& haystack, const TokenSequence& needle) {
  if (needle.empty() || haystack.size() < needle.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    if (detail::kgram_equal(haystack, i, needle, 0, needle.size())) return true;
  }
  return false;
}

// Winnowing fingerprints: the minimal k-gram hash of every window of
// `window` consecutive hashes, kept as a value set. Sequences shorter than
// k + window - 1 tokens produce no fingerprints.
inline std::set<std::uint64_t> winnow_fingerprints(const TokenSequence& seq, std::size_t k,
                                                   std::size_t window) {
  if (k < 1 || window < 1) throw std::domain_error("winnow_fingerprints: k and window must be >= 1");
  auto hashes = detail::kgram_hashes(seq, k);
  std::set<std::uint64_t> out;
  if (hashes.size() < window) return out;
  // Sliding minimum via a monotone index deque.
  std::vector<std::size_t> deque;
  std::size_t head = 0;
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    while (deque.size() > head && hashes[deque.back()] >= hashes[i]) deque.pop_back();
    deque.push_back(i);
    if (deque[head] + window <= i) ++head;
    if (i + 1 >= window) out.insert(hashes[deque[head]]);
  }
  return out;
}

// |fingerprints(gen) intersect fingerprints(ref)| / |fingerprints(ref)|,
// zero when the reference has no fingerprints.
inline double winnow_similarity(const TokenSequence& generation, const TokenSequence& reference,
                                std::size_t k, std::size_t window) {
  auto ref_fp = winnow_fingerprints(reference, k, window);
  if (ref_fp.empty()) return 0.0;
  auto gen_fp = winnow_fingerprints(generation, k, window);
  std::size_t common = 0;
  for (std::uint64_t fp : ref_fp)
    if (gen_fp.count(fp)) ++common;
  return static_cast<double>(common) / static_cast<double>(ref_fp.size());
}

// Unbiased pass@k estimator 1 - C(n-c, k) / C(n, k) in overflow-safe product
// form.
inline double pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
  if (c > n || k < 1 || k > n) throw std::domain_error("pass_at_k: need 0 <= c <= n and 1 <= k <= n");
  if (c == 0) return 0.0;
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (std::size_t i = 0; i < k; ++i)
    miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  return 1.0 - miss;
}

// ---------------------------------------------------------------------------
// Report builder
// ---------------------------------------------------------------------------

struct MetricConfig {
  std::vector<std::size_t> kgram_ks = {4, 8};
  std::size_t winnow_k = 4;
  std::size_t winnow_window = 4;
};

struct PromptMetrics {
  // Keyed by k: averaged distinct-match count and the 0/1 completion rate.
  std::map<std::size_t, double> kgram_count;
  std::map<std::size_t, double> kgram_rate;
  double em = 0.0;      // mean longest-run overlap across generations
  double lc = 0.0;      // distinct tagged secrets leaked by any generation
  double winnow = 0.0;  // mean fingerprint coverage
};

struct MetricReport {
  MetricConfig config;
  std::vector<PromptMetrics> per_prompt;
  PromptMetrics aggregate;       // mean of the per-prompt values
  double em_per_generation = 0;  // global per-generation mean, kept alongside
  std::size_t n_prompts = 0;
  std::size_t n_generations = 0;

  nlohmann::json to_json() const {
    auto prompt_json = [&](const PromptMetrics& m) {
      nlohmann::json j{{"em", m.em}, {"lc", m.lc}, {"winnow", m.winnow}};
      for (auto [k, v] : m.kgram_count) j["count_k" + std::to_string(k)] = v;
      for (auto [k, v] : m.kgram_rate) j["rate_k" + std::to_string(k)] = v;
      return j;
    };
    nlohmann::json per = nlohmann::json::array();
    for (const auto& m : per_prompt) per.push_back(prompt_json(m));
    return nlohmann::json{{"aggregate", prompt_json(aggregate)},
                          {"per_prompt", per},
                          {"em_per_generation", em_per_generation},
                          {"n_prompts", n_prompts},
                          {"n_generations", n_generations}};
  }

  // Fixed column set. The k-gram count metric is reported under both its
  // infringement (ic) and poisoning (pc) names; they are the same
  // computation applied to whichever corpus was evaluated.
  static std::string csv_header() {
    return "prompt,ic4,ic8,pc4,pc8,em,lc,winnow,rate_ic4,rate_ic8";
  }

  static std::string csv_row(const std::string& label, const PromptMetrics& m) {
    auto count_at = [&](std::size_t k) {
      auto it = m.kgram_count.find(k);
      return it == m.kgram_count.end() ? 0.0 : it->second;
    };
    auto rate_at = [&](std::size_t k) {
      auto it = m.kgram_rate.find(k);
      return it == m.kgram_rate.end() ? 0.0 : it->second;
    };
    std::ostringstream os;
    os << label << ',' << format_double(count_at(4)) << ',' << format_double(count_at(8)) << ','
       << format_double(count_at(4)) << ',' << format_double(count_at(8)) << ','
       << format_double(m.em) << ',' << format_double(m.lc) << ',' << format_double(m.winnow)
       << ',' << format_double(rate_at(4)) << ',' << format_double(rate_at(8));
    return os.str();
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << csv_header() << "\n";
    for (std::size_t i = 0; i < per_prompt.size(); ++i)
      os << csv_row(std::to_string(i), per_prompt[i]) << "\n";
    os << csv_row("aggregate", aggregate) << "\n";
    return os.str();
  }
};

// Mean over all of one prompt's generations of the distinct-k-gram match
// count against that prompt's reference. This is the per-prompt unit of
// IC_k / PC_k.
inline double ic_metric_prompt(const std::vector<TokenSequence>& generations,
                               const TokenSequence& reference, std::size_t k) {
  if (generations.empty()) throw IntegrityError("ic_metric: prompt with no generations");
  double sum = 0.0;
  for (const auto& gen : generations)
    sum += static_cast<double>(kgram_match_count(gen, reference, k));
  return sum / static_cast<double>(generations.size());
}

// Averaged count over all generations of all prompts.
inline double ic_metric(const std::vector<std::vector<TokenSequence>>& generations_per_prompt,
                        const std::vector<TokenSequence>& references, std::size_t k) {
  if (generations_per_prompt.size() != references.size())
    throw IntegrityError("ic_metric: prompts and references misaligned");
  if (references.empty()) throw IntegrityError("ic_metric: no prompts");
  double sum = 0.0;
  for (std::size_t i = 0; i < references.size(); ++i)
    sum += ic_metric_prompt(generations_per_prompt[i], references[i], k);
  return sum / static_cast<double>(references.size());
}

// Distinct tagged secrets reproduced verbatim by any of the prompt's
// generations, averaged over prompts.
inline double leak_count(const std::vector<std::vector<TokenSequence>>& generations_per_prompt,
                         const std::vector<std::vector<TokenSequence>>& secrets_per_prompt) {
  if (generations_per_prompt.size() != secrets_per_prompt.size())
    throw IntegrityError("leak_count: prompts and secrets misaligned");
  if (generations_per_prompt.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < generations_per_prompt.size(); ++i) {
    std::size_t leaked = 0;
    for (const auto& secret : secrets_per_prompt[i]) {
      for (const auto& gen : generations_per_prompt[i]) {
        if (contains_token_run(gen, secret)) {
          ++leaked;
          break;
        }
      }
    }
    sum += static_cast<double>(leaked);
  }
  return sum / static_cast<double>(generations_per_prompt.size());
}

inline MetricReport evaluate_generations(
    const std::vector<std::vector<TokenSequence>>& generations_per_prompt,
    const std::vector<TokenSequence>& references,
    const std::vector<std::vector<TokenSequence>>& secrets_per_prompt,
    const MetricConfig& config = MetricConfig{}) {
  if (generations_per_prompt.size() != references.size())
    throw IntegrityError("evaluate_generations: prompts and references misaligned");
  if (!secrets_per_prompt.empty() && secrets_per_prompt.size() != references.size())
    throw IntegrityError("evaluate_generations: prompts and secrets misaligned");

  MetricReport report;
  report.config = config;
  report.n_prompts = references.size();

  double em_gen_sum = 0.0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    const auto& gens = generations_per_prompt[i];
    if (gens.empty()) throw IntegrityError("evaluate_generations: prompt with no generations");
    PromptMetrics m;
    for (std::size_t k : config.kgram_ks) {
      double count_sum = 0.0, rate_sum = 0.0;
      for (const auto& gen : gens) {
        std::size_t c = kgram_match_count(gen, references[i], k);
        count_sum += static_cast<double>(c);
        rate_sum += c > 0 ? 1.0 : 0.0;
      }
      m.kgram_count[k] = count_sum / static_cast<double>(gens.size());
      m.kgram_rate[k] = rate_sum / static_cast<double>(gens.size());
    }
    double em_sum = 0.0, winnow_sum = 0.0;
    for (const auto& gen : gens) {
      em_sum += static_cast<double>(em_overlap(gen, references[i]));
      winnow_sum += winnow_similarity(gen, references[i], config.winnow_k, config.winnow_window);
    }
    m.em = em_sum / static_cast<double>(gens.size());
    m.winnow = winnow_sum / static_cast<double>(gens.size());
    em_gen_sum += em_sum;
    report.n_generations += gens.size();

    if (!secrets_per_prompt.empty()) {
      std::size_t leaked = 0;
      for (const auto& secret : secrets_per_prompt[i]) {
        for (const auto& gen : gens) {
          if (contains_token_run(gen, secret)) {
            ++leaked;
            break;
          }
        }
      }
      m.lc = static_cast<double>(leaked);
    }
    report.per_prompt.push_back(std::move(m));
  }

  PromptMetrics& agg = report.aggregate;
  for (std::size_t k : config.kgram_ks) {
    agg.kgram_count[k] = 0.0;
    agg.kgram_rate[k] = 0.0;
  }
  for (const auto& m : report.per_prompt) {
    for (std::size_t k : config.kgram_ks) {
      agg.kgram_count[k] += m.kgram_count.at(k);
      agg.kgram_rate[k] += m.kgram_rate.at(k);
    }
    agg.em += m.em;
    agg.lc += m.lc;
    agg.winnow += m.winnow;
  }
  double inv = 1.0 / static_cast<double>(report.per_prompt.size());
  for (std::size_t k : config.kgram_ks) {
    agg.kgram_count[k] *= inv;
    agg.kgram_rate[k] *= inv;
  }
  agg.em *= inv;
  agg.lc *= inv;
  agg.winnow *= inv;
  report.em_per_generation = em_gen_sum / static_cast<double>(report.n_generations);
  return report;
}

}  // namespace purelm
