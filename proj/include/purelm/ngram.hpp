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
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "purelm/lm.hpp"
#include "purelm/serialize.hpp"

namespace purelm {

// Add-k smoothed n-gram model with hard backoff: predictions come from the
// longest context order that was actually observed in training. Every
// distribution has full support (add_k > 0), which the ensemble's geometric
// mean and the log-ratio certificates rely on.
class NGramModel final : public LanguageModel {
 public:
  static NGramModel train(const std::vector<std::string>& corpus,
                          std::shared_ptr<const Vocabulary> vocab, std::size_t order,
                          double add_k) {
    if (!vocab) throw ConfigError("train_ngram: null vocabulary");
    if (order < 1) throw ConfigError("train_ngram: order must be >= 1");
    if (!(add_k > 0.0)) throw std::domain_error("train_ngram: add_k must be > 0");
    NGramModel m(std::move(vocab), order, add_k);
    std::size_t n_tokens = 0;
    for (const auto& doc : corpus) {
      TokenSequence toks = m.vocab_->encode(doc);
      n_tokens += toks.size();
      for (std::size_t i = 0; i < toks.size(); ++i) {
        for (std::size_t ctx_len = 0; ctx_len < order && ctx_len <= i; ++ctx_len) {
          Key key(toks.begin() + static_cast<std::ptrdiff_t>(i - ctx_len),
                  toks.begin() + static_cast<std::ptrdiff_t>(i));
          auto& bucket = m.tables_[ctx_len][key];
          bucket.total += 1;
          bucket.successors[toks[i]] += 1;
        }
      }
    }
    if (n_tokens == 0) throw ConfigError("train_ngram: empty corpus");
    return m;
  }

  LogitVector next_logits(Context ctx) const override {
    const std::size_t v = vocab_->size();
    std::size_t max_len = std::min(ctx.size(), order_ - 1);
    for (std::size_t len = max_len + 1; len-- > 0;) {
      Context suffix = ctx.last(len);
      Key key(suffix.tokens.begin(), suffix.tokens.end());
      auto it = tables_[len].find(key);
      if (it == tables_[len].end() || it->second.total == 0) continue;
      const auto& bucket = it->second;
      double denom = static_cast<double>(bucket.total) + add_k_ * static_cast<double>(v);
      double floor_logp = std::log(add_k_ / denom);
      LogitVector z(v, floor_logp);
      for (const auto& [tok, count] : bucket.successors)
        z[tok] = std::log((static_cast<double>(count) + add_k_) / denom);
      return z;
    }
    // Unreachable for a trained model: the empty context always has counts.
    return LogitVector(v, -std::log(static_cast<double>(v)));
  }

  const Vocabulary& vocab() const override { return *vocab_; }
  std::size_t order() const { return order_; }
  double add_k() const { return add_k_; }

  void save(std::ostream& os) const {
    os << "ngram-v1\n" << vocab_->digest() << "\n";
    write_u64(os, order_);
    write_f64(os, add_k_);
    for (std::size_t len = 0; len < order_; ++len) {
      // Contexts sorted so serialization is byte-stable.
      std::vector<const typename Table::value_type*> rows;
      rows.reserve(tables_[len].size());
      for (const auto& kv : tables_[len]) rows.push_back(&kv);
      std::sort(rows.begin(), rows.end(),
                [](auto* a, auto* b) { return a->first < b->first; });
      write_u64(os, rows.size());
      for (const auto* row : rows) {
        for (TokenId t : row->first) write_u64(os, t);
        write_u64(os, row->second.total);
        std::vector<std::pair<TokenId, std::uint64_t>> succ(row->second.successors.begin(),
                                                            row->second.successors.end());
        std::sort(succ.begin(), succ.end());
        write_u64(os, succ.size());
        for (auto [tok, count] : succ) {
          write_u64(os, tok);
          write_u64(os, count);
        }
      }
    }
  }

  static NGramModel load(std::istream& is, std::shared_ptr<const Vocabulary> vocab) {
    if (!vocab) throw ConfigError("ngram load: null vocabulary");
    std::string magic = expect_line(is, "ngram header");
    if (magic != "ngram-v1") throw IntegrityError("bad ngram magic: " + magic);
    std::string digest = expect_line(is, "ngram vocab digest");
    if (digest != vocab->digest())
      throw IntegrityError("ngram model was trained against a different vocabulary");
    std::size_t order = static_cast<std::size_t>(read_u64(is));
    double add_k = read_f64(is);
    NGramModel m(std::move(vocab), order, add_k);
    for (std::size_t len = 0; len < order; ++len) {
      std::uint64_t n_rows = read_u64(is);
      for (std::uint64_t r = 0; r < n_rows; ++r) {
        Key key(len);
        for (std::size_t i = 0; i < len; ++i) key[i] = static_cast<TokenId>(read_u64(is));
        auto& bucket = m.tables_[len][key];
        bucket.total = read_u64(is);
        std::uint64_t n_succ = read_u64(is);
        for (std::uint64_t s = 0; s < n_succ; ++s) {
          TokenId tok = static_cast<TokenId>(read_u64(is));
          bucket.successors[tok] = read_u64(is);
        }
      }
    }
    return m;
  }

 private:
  using Key = std::vector<TokenId>;

  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (TokenId t : k) {
        h ^= t;
        h *= 0x100000001b3ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };

  struct Bucket {
    std::uint64_t total = 0;
    std::unordered_map<TokenId, std::uint64_t> successors;
  };

  using Table = std::unordered_map<Key, Bucket, KeyHash>;

  NGramModel(std::shared_ptr<const Vocabulary> vocab, std::size_t order, double add_k)
      : vocab_(std::move(vocab)), order_(order), add_k_(add_k), tables_(order) {}

  std::shared_ptr<const Vocabulary> vocab_;
  std::size_t order_;
  double add_k_;
  std::vector<Table> tables_;  // indexed by context length 0 .. order-1
};

}  // namespace purelm
