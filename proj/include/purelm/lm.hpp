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
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "purelm/logits.hpp"
#include "purelm/tokenizer.hpp"

namespace purelm {

// Conditioning prompt view. Callers hand the full available history; each
// model takes its own bounded suffix.
struct Context {
  std::span<const TokenId> tokens;

  Context last(std::size_t window) const {
    std::size_t n = std::min(tokens.size(), window);
    return Context{tokens.subspan(tokens.size() - n, n)};
  }

  std::size_t size() const { return tokens.size(); }
};

inline Context make_context(const TokenSequence& seq) {
  return Context{std::span<const TokenId>(seq.data(), seq.size())};
}

// The common next-token-logits contract both ensemble members implement.
// Outputs are raw scores of length |V|, finite everywhere.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual LogitVector next_logits(Context ctx) const = 0;
  virtual const Vocabulary& vocab() const = 0;
};

// A model decoding on its own: member temperature first, sampling
// temperature on top. This is the single-model endpoint the ensemble
// degenerates to at alpha = 1 (resp. alpha = 0).
inline ProbVector model_distribution(const LanguageModel& m, Context ctx,
                                     double member_temperature = 1.0,
                                     double sampling_temperature = 1.0) {
  LogitVector z = m.next_logits(ctx);
  if (member_temperature != 1.0) {
    if (!(member_temperature > 0.0)) throw std::domain_error("member temperature must be > 0");
    for (double& v : z) v /= member_temperature;
  }
  return softmax_with_temperature(z, sampling_temperature);
}

using NextDistFn = std::function<ProbVector(Context)>;

// exp(mean negative log-likelihood per token, nats) under an arbitrary
// next-token distribution.
inline double perplexity_under(const NextDistFn& next_dist, const Vocabulary& vocab,
                               const std::vector<std::string>& docs) {
  double nll = 0.0;
  std::size_t n_tokens = 0;
  for (const auto& doc : docs) {
    TokenSequence toks = vocab.encode(doc);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      Context ctx{std::span<const TokenId>(toks.data(), i)};
      ProbVector p = next_dist(ctx);
      double prob = p.at(toks[i]);
      if (!(prob > 0.0)) throw std::domain_error("perplexity: zero-probability token");
      nll -= std::log(prob);
      ++n_tokens;
    }
  }
  if (n_tokens == 0) throw ConfigError("perplexity: corpus has no tokens");
  return std::exp(nll / static_cast<double>(n_tokens));
}

inline double perplexity(const LanguageModel& m, const std::vector<std::string>& docs) {
  return perplexity_under([&](Context ctx) { return model_distribution(m, ctx); }, m.vocab(), docs);
}

}  // namespace purelm
