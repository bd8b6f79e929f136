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
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

#include "purelm/lm.hpp"
#include "purelm/rng.hpp"
#include "purelm/serialize.hpp"

namespace purelm {

/// Smallest trainable softmax language model that still supports the
/// anchored fine-tuning protocol:
///
///   h      = mean of the embeddings of the (bounded) context window
///   logits = bias + projection . h
///   loss   = mean token cross-entropy (nats) + lambda * ||theta - anchor||_1
///
/// The anchor is a frozen snapshot of the pre-fine-tune parameters; the L1
/// pull toward it is what keeps injection from erasing the base behavior.
/// Parameters live in one flat vector (embeddings, projection, bias) so the
/// regularizer, the gradient, and the finite-difference checks all address
/// coordinates uniformly.
class TinyNeuralLM final : public LanguageModel {
 public:
  TinyNeuralLM(std::shared_ptr<const Vocabulary> vocab, std::size_t embed_dim,
               std::size_t window, std::uint64_t init_seed, double init_scale = 0.05)
      : vocab_(std::move(vocab)), embed_dim_(embed_dim), window_(window) {
    if (!vocab_) throw ConfigError("TinyNeuralLM: null vocabulary");
    if (embed_dim_ == 0 || window_ == 0)
      throw ConfigError("TinyNeuralLM: embed_dim and window must be >= 1");
    const std::size_t v = vocab_->size();
    theta_.assign(2 * v * embed_dim_ + v, 0.0);
    if (init_scale != 0.0) {
      Rng rng(init_seed);
      // Bias starts at zero; embeddings and projection get small uniform noise.
      for (std::size_t i = 0; i < 2 * v * embed_dim_; ++i)
        theta_[i] = (rng.next_double() * 2.0 - 1.0) * init_scale;
    }
  }

  LogitVector next_logits(Context ctx) const override {
    const std::size_t v = vocab_->size();
    Context win = ctx.last(window_);
    std::vector<double> h(embed_dim_, 0.0);
    if (!win.tokens.empty()) {
      for (TokenId tok : win.tokens) {
        if (tok >= v) throw IntegrityError("TinyNeuralLM: token id out of range");
        const double* e = embedding(tok);
        for (std::size_t j = 0; j < embed_dim_; ++j) h[j] += e[j];
      }
      double inv = 1.0 / static_cast<double>(win.tokens.size());
      for (double& x : h) x *= inv;
    }
    LogitVector z(v);
    for (std::size_t y = 0; y < v; ++y) {
      const double* w = projection(static_cast<TokenId>(y));
      double acc = bias()[y];
      for (std::size_t j = 0; j < embed_dim_; ++j) acc += w[j] * h[j];
      z[y] = acc;
    }
    return z;
  }

  const Vocabulary& vocab() const override { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }
  std::size_t embed_dim() const { return embed_dim_; }
  std::size_t window() const { return window_; }

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  void set_anchor() { anchor_ = theta_; }
  bool has_anchor() const { return !anchor_.empty(); }
  const std::vector<double>& anchor() const {
    if (!has_anchor()) throw ConfigError("TinyNeuralLM: anchor not set");
    return anchor_;
  }

  void save(std::ostream& os) const {
    os << "tinylm-v1\n" << vocab_->digest() << "\n";
    write_u64(os, vocab_->size());
    write_u64(os, embed_dim_);
    write_u64(os, window_);
    write_u64(os, theta_.size());
    for (double p : theta_) write_f64(os, p);
  }

  static TinyNeuralLM load(std::istream& is, std::shared_ptr<const Vocabulary> vocab) {
    if (!vocab) throw ConfigError("tinylm load: null vocabulary");
    std::string magic = expect_line(is, "tinylm header");
    if (magic != "tinylm-v1") throw IntegrityError("bad tinylm magic: " + magic);
    std::string digest = expect_line(is, "tinylm vocab digest");
    if (digest != vocab->digest())
      throw IntegrityError("tinylm model was trained against a different vocabulary");
    std::uint64_t v = read_u64(is);
    if (v != vocab->size()) throw IntegrityError("tinylm vocabulary size mismatch");
    std::uint64_t embed_dim = read_u64(is);
    std::uint64_t window = read_u64(is);
    TinyNeuralLM m(std::move(vocab), embed_dim, window, 0, 0.0);
    std::uint64_t n = read_u64(is);
    if (n != m.theta_.size()) throw IntegrityError("tinylm parameter count mismatch");
    for (double& p : m.theta_) p = read_f64(is);
    return m;
  }

  // Flat layout accessors.
  double* embedding(TokenId tok) { return theta_.data() + tok * embed_dim_; }
  const double* embedding(TokenId tok) const { return theta_.data() + tok * embed_dim_; }
  double* projection(TokenId tok) {
    return theta_.data() + (vocab_->size() + tok) * embed_dim_;
  }
  const double* projection(TokenId tok) const {
    return theta_.data() + (vocab_->size() + tok) * embed_dim_;
  }
  double* bias() { return theta_.data() + 2 * vocab_->size() * embed_dim_; }
  const double* bias() const { return theta_.data() + 2 * vocab_->size() * embed_dim_; }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  std::size_t embed_dim_;
  std::size_t window_;
  std::vector<double> theta_;
  std::vector<double> anchor_;
};

struct TrainingConfig {
  double lambda = 0.0;  // anchor weight of the L1 pull
  double learning_rate = 0.1;
  std::size_t step_count = 0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (lambda < 0.0) throw ConfigError("TrainingConfig: lambda must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("TrainingConfig: learning rate must be > 0");
    if (batch_size == 0) throw ConfigError("TrainingConfig: batch size must be >= 1");
  }
};

struct TrainExample {
  TokenSequence context;  // already clipped to the model window by the builder
  TokenId target;
};

// Sliding next-token examples over whole documents, contexts clipped to the
// window.
inline std::vector<TrainExample> make_training_examples(const Vocabulary& vocab,
                                                        const std::vector<std::string>& docs,
                                                        std::size_t window) {
  std::vector<TrainExample> out;
  for (const auto& doc : docs) {
    TokenSequence toks = vocab.encode(doc);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      std::size_t start = i > window ? i - window : 0;
      out.push_back(TrainExample{TokenSequence(toks.begin() + static_cast<std::ptrdiff_t>(start),
                                               toks.begin() + static_cast<std::ptrdiff_t>(i)),
                                 toks[i]});
    }
  }
  return out;
}

struct LossResult {
  double ce = 0.0;     // mean token cross-entropy, nats
  double l1 = 0.0;     // ||theta - anchor||_1
  double total = 0.0;  // ce + lambda * l1
  std::vector<double> grad;
};

// Below this distance from the anchor the L1 subgradient is taken as 0, so
// untouched coordinates stay pinned.
inline constexpr double kAnchorKinkTolerance = 1e-12;

inline LossResult anchored_loss(const TinyNeuralLM& model, std::span<const TrainExample> batch,
                                double lambda) {
  if (!model.has_anchor()) throw ConfigError("anchored_loss: anchor not set");
  if (batch.empty()) throw ConfigError("anchored_loss: empty batch");
  const std::size_t v = model.vocab().size();
  const std::size_t d = model.embed_dim();
  const auto& theta = model.params();
  const auto& anchor = model.anchor();

  LossResult res;
  res.grad.assign(theta.size(), 0.0);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  std::vector<double> h(d);
  for (const auto& ex : batch) {
    if (ex.target >= v) throw IntegrityError("anchored_loss: target id out of range");
    Context ctx = make_context(ex.context).last(model.window());
    std::fill(h.begin(), h.end(), 0.0);
    double inv_ctx = 0.0;
    if (!ctx.tokens.empty()) {
      for (TokenId tok : ctx.tokens) {
        const double* e = model.embedding(tok);
        for (std::size_t j = 0; j < d; ++j) h[j] += e[j];
      }
      inv_ctx = 1.0 / static_cast<double>(ctx.tokens.size());
      for (double& x : h) x *= inv_ctx;
    }

    LogitVector z(v);
    for (std::size_t y = 0; y < v; ++y) {
      const double* w = model.projection(static_cast<TokenId>(y));
      double acc = model.bias()[y];
      for (std::size_t j = 0; j < d; ++j) acc += w[j] * h[j];
      z[y] = acc;
    }
    ProbVector p = softmax(z);
    res.ce -= std::log(p[ex.target]) * inv_batch;

    // dz = (p - onehot(target)) / batch;  db = dz;  dW_y = dz_y * h;
    // dh = sum_y dz_y * W_y;  dE_tok += dh / |ctx| for each window token.
    std::vector<double> dh(d, 0.0);
    double* gb = res.grad.data() + 2 * v * d;
    for (std::size_t y = 0; y < v; ++y) {
      double dz = (p[y] - (y == ex.target ? 1.0 : 0.0)) * inv_batch;
      gb[y] += dz;
      double* gw = res.grad.data() + (v + y) * d;
      const double* w = model.projection(static_cast<TokenId>(y));
      for (std::size_t j = 0; j < d; ++j) {
        gw[j] += dz * h[j];
        dh[j] += dz * w[j];
      }
    }
    if (!ctx.tokens.empty()) {
      for (TokenId tok : ctx.tokens) {
        double* ge = res.grad.data() + tok * d;
        for (std::size_t j = 0; j < d; ++j) ge[j] += dh[j] * inv_ctx;
      }
    }
  }

  for (std::size_t i = 0; i < theta.size(); ++i) {
    double diff = theta[i] - anchor[i];
    res.l1 += std::abs(diff);
    if (std::abs(diff) >= kAnchorKinkTolerance)
      res.grad[i] += lambda * (diff > 0.0 ? 1.0 : -1.0);
  }
  res.total = res.ce + lambda * res.l1;
  return res;
}

struct StepLog {
  std::size_t step;
  double ce_loss;
  double l1_term;
  double total;
};

using StepLogSink = std::function<void(const StepLog&)>;

// Plain SGD with seeded epoch shuffling. Takes the anchor snapshot from the
// pre-fine-tune parameters if one is not already set.
inline TinyNeuralLM finetune_anchored(TinyNeuralLM model, const std::vector<TrainExample>& dataset,
                                      const TrainingConfig& config,
                                      const StepLogSink& log_sink = nullptr) {
  config.validate();
  if (config.step_count == 0) return model;
  if (dataset.empty()) throw ConfigError("finetune_anchored: empty dataset");
  if (!model.has_anchor()) model.set_anchor();

  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::size_t cursor = 0;

  std::vector<TrainExample> batch;
  batch.reserve(config.batch_size);
  for (std::size_t step = 0; step < config.step_count; ++step) {
    batch.clear();
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(dataset[order[cursor++]]);
    }
    LossResult loss = anchored_loss(model, batch, config.lambda);
    if (!std::isfinite(loss.total)) throw TrainingError("finetune_anchored: loss diverged", step);
    auto& theta = model.params();
    for (std::size_t i = 0; i < theta.size(); ++i)
      theta[i] -= config.learning_rate * loss.grad[i];
    if (log_sink) log_sink(StepLog{step, loss.ce, loss.l1, loss.total});
  }
  return model;
}

}  // namespace purelm
