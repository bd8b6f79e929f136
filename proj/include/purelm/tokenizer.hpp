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
#include <cctype>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "purelm/errors.hpp"
#include "purelm/serialize.hpp"

namespace purelm {

// Both ensemble members must score the same token ids, so one shared
// vocabulary is built up front and every model references it. The splitter
// is a transparent whitespace/punctuation rule (not subword): metric oracles
// can then be checked by hand.

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kUnkId = 0;
inline constexpr TokenId kEosId = 1;
inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kEosToken = "<eos>";

// Splits text into word and single-character punctuation tokens.
// The sentinel strings contain '<' and '>' and therefore can never be
// produced by this rule.
inline std::vector<std::string> split_text(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return out;
}

class Vocabulary {
 public:
  // Frequency-ranked build: keeps the most frequent tokens up to
  // max_size - 2 (ids 0 and 1 are reserved), ties broken by first
  // occurrence in corpus order.
  static Vocabulary build(const std::vector<std::string>& corpus, std::size_t max_size) {
    if (max_size < 3) throw ConfigError("build_vocabulary: max_size must be >= 3");
    struct Entry {
      std::string token;
      std::uint64_t count = 0;
      std::uint64_t first_seen = 0;
    };
    std::unordered_map<std::string, std::size_t> index;
    std::vector<Entry> entries;
    std::uint64_t position = 0;
    for (const auto& doc : corpus) {
      for (auto& tok : split_text(doc)) {
        auto [it, inserted] = index.try_emplace(tok, entries.size());
        if (inserted) entries.push_back(Entry{tok, 0, position});
        entries[it->second].count += 1;
        ++position;
      }
    }
    if (entries.empty()) throw ConfigError("build_vocabulary: empty corpus");
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.first_seen < b.first_seen;
    });
    std::size_t keep = std::min(entries.size(), max_size - 2);
    std::vector<std::string> tokens;
    tokens.reserve(keep + 2);
    tokens.emplace_back(kUnkToken);
    tokens.emplace_back(kEosToken);
    for (std::size_t i = 0; i < keep; ++i) tokens.push_back(std::move(entries[i].token));
    return Vocabulary(std::move(tokens));
  }

  // Direct construction from explicit token strings (sentinels included).
  // Used by fixtures and by load().
  static Vocabulary from_tokens(std::vector<std::string> tokens) {
    return Vocabulary(std::move(tokens));
  }

  std::size_t size() const { return tokens_.size(); }

  const std::string& token(TokenId id) const {
    if (id >= tokens_.size()) throw IntegrityError("token id out of range: " + std::to_string(id));
    return tokens_[id];
  }

  std::optional<TokenId> find(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  TokenSequence encode(std::string_view text) const {
    TokenSequence out;
    for (auto& tok : split_text(text)) {
      auto id = find(tok);
      out.push_back(id ? *id : kUnkId);
    }
    return out;
  }

  std::string decode(const TokenSequence& tokens) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out.push_back(' ');
      out += token(tokens[i]);
    }
    return out;
  }

  // Line-oriented container: "vocab-v1 <size>" header then one token per
  // line in id order.
  std::string serialize() const {
    std::ostringstream os;
    os << "vocab-v1 " << tokens_.size() << "\n";
    for (const auto& tok : tokens_) os << tok << "\n";
    return os.str();
  }

  void save(std::ostream& os) const { os << serialize(); }

  static Vocabulary load(std::istream& is) {
    std::string header = expect_line(is, "vocabulary header");
    std::istringstream hs(header);
    std::string magic;
    std::size_t size = 0;
    hs >> magic >> size;
    if (magic != "vocab-v1" || size < 2) throw IntegrityError("bad vocabulary header: " + header);
    std::vector<std::string> tokens;
    tokens.reserve(size);
    for (std::size_t i = 0; i < size; ++i) tokens.push_back(expect_line(is, "vocabulary token"));
    return Vocabulary(std::move(tokens));
  }

  // Content digest, cached at construction; model files embed it so a model
  // can never be paired with the wrong vocabulary.
  const std::string& digest() const { return digest_; }

 private:
  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < 2 || tokens_[kUnkId] != kUnkToken || tokens_[kEosId] != kEosToken)
      throw IntegrityError("vocabulary must start with the <unk>/<eos> sentinels");
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (i >= 2 && tokens_[i].empty()) throw IntegrityError("empty vocabulary token");
      auto [it, inserted] = index_.try_emplace(tokens_[i], static_cast<TokenId>(i));
      if (!inserted) throw IntegrityError("duplicate vocabulary token: " + tokens_[i]);
    }
    digest_ = to_hex(fnv1a64(serialize()));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::string digest_;
};

}  // namespace purelm
