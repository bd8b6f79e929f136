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

#include <atomic>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "purelm/certificate.hpp"
#include "purelm/crafting.hpp"
#include "purelm/ensemble.hpp"
#include "purelm/metrics.hpp"
#include "purelm/ngram.hpp"
#include "purelm/tinylm.hpp"

namespace purelm {

// Experiment orchestration: the alpha x T sweep, the scheduled-weights
// experiment, direct single-model evaluation (the alpha endpoints must be
// byte-identical to it), and per-prompt certification. Results are
// deterministic functions of (inputs, seed): per-generation seeds are derived
// from (seed, temperature, prompt, generation) — deliberately not from alpha,
// so every alpha cell and the direct evaluation sample against the same
// stream — and cells may be computed by any number of workers without
// changing a byte of the output.

struct SweepConfig {
  std::string untrusted_model;
  std::string benign_model;
  std::string vocab;
  std::string crafted_corpus;
  std::string heldout_corpus;

  std::vector<double> alpha_grid = {1.0, 0.8, 0.6, 0.4, 0.2, 0.0};
  std::vector<double> temperature_grid = {0.2, 0.5, 0.8};
  std::size_t generations_per_prompt = 50;
  std::size_t max_length = 24;
  std::vector<std::size_t> metric_ks = {4, 8};
  std::size_t winnow_k = 4;
  std::size_t winnow_window = 4;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  double temp_untrusted = 1.0;
  double temp_benign = 1.0;

  void validate() const {
    if (alpha_grid.empty() || temperature_grid.empty())
      throw ConfigError("sweep: alpha and temperature grids must be non-empty");
    for (double a : alpha_grid)
      if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("sweep: alpha values must lie in [0, 1]");
    for (double t : temperature_grid)
      if (!(t > 0.0)) throw ConfigError("sweep: temperatures must be > 0");
    if (generations_per_prompt == 0) throw ConfigError("sweep: generations_per_prompt must be >= 1");
    if (max_length == 0) throw ConfigError("sweep: max_length must be >= 1");
    if (metric_ks.empty()) throw ConfigError("sweep: metric_ks must be non-empty");
    if (!(temp_untrusted > 0.0) || !(temp_benign > 0.0))
      throw ConfigError("sweep: member temperatures must be > 0");
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"untrusted_model", untrusted_model},
                          {"benign_model", benign_model},
                          {"vocab", vocab},
                          {"crafted_corpus", crafted_corpus},
                          {"heldout_corpus", heldout_corpus},
                          {"alpha_grid", alpha_grid},
                          {"temperature_grid", temperature_grid},
                          {"generations_per_prompt", generations_per_prompt},
                          {"max_length", max_length},
                          {"metric_ks", metric_ks},
                          {"winnow_k", winnow_k},
                          {"winnow_window", winnow_window},
                          {"seed", seed},
                          {"workers", workers},
                          {"temp_untrusted", temp_untrusted},
                          {"temp_benign", temp_benign}};
  }
};

// ---------------------------------------------------------------------------
// Config file: sections of key = value lines, env-overridable for CI
// (PURELM_<SECTION>_<KEY>).
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string part;
  while (std::getline(is, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

inline std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

inline std::unordered_map<std::string, std::string> parse_ini(std::istream& is) {
  std::unordered_map<std::string, std::string> kv;
  std::string line, section;
  while (std::getline(is, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: expected key = value, got '" + line + "'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError("config: key '" + key + "' outside any section");
    kv[section + "." + key] = value;
  }
  return kv;
}

inline SweepConfig sweep_config_from_map(std::unordered_map<std::string, std::string> kv) {
  SweepConfig cfg;
  auto take = [&](const char* section, const char* key) -> std::string {
    std::string id = std::string(section) + "." + key;
    std::string env_name = "PURELM_" + detail::upper(section) + "_" + detail::upper(key);
    const char* env = std::getenv(env_name.c_str());
    std::string value;
    auto it = kv.find(id);
    if (it != kv.end()) {
      value = it->second;
      kv.erase(it);
    }
    if (env) value = env;  // environment wins over the file
    return value;
  };
  auto set_string = [&](const char* s, const char* k, std::string& out) {
    std::string v = take(s, k);
    if (!v.empty()) out = v;
  };
  auto set_u64 = [&](const char* s, const char* k, auto& out) {
    std::string v = take(s, k);
    if (!v.empty()) out = static_cast<std::remove_reference_t<decltype(out)>>(std::stoull(v));
  };
  auto set_double = [&](const char* s, const char* k, double& out) {
    std::string v = take(s, k);
    if (!v.empty()) out = std::stod(v);
  };

  set_string("paths", "untrusted_model", cfg.untrusted_model);
  set_string("paths", "benign_model", cfg.benign_model);
  set_string("paths", "vocab", cfg.vocab);
  set_string("paths", "crafted_corpus", cfg.crafted_corpus);
  set_string("paths", "heldout_corpus", cfg.heldout_corpus);

  std::string alphas = take("sweep", "alpha_grid");
  if (!alphas.empty()) {
    cfg.alpha_grid.clear();
    for (auto& part : detail::split_list(alphas)) cfg.alpha_grid.push_back(std::stod(part));
  }
  std::string temps = take("sweep", "temperature_grid");
  if (!temps.empty()) {
    cfg.temperature_grid.clear();
    for (auto& part : detail::split_list(temps)) cfg.temperature_grid.push_back(std::stod(part));
  }
  std::string ks = take("sweep", "metric_ks");
  if (!ks.empty()) {
    cfg.metric_ks.clear();
    for (auto& part : detail::split_list(ks)) cfg.metric_ks.push_back(std::stoull(part));
  }
  set_u64("sweep", "generations_per_prompt", cfg.generations_per_prompt);
  set_u64("sweep", "max_length", cfg.max_length);
  set_u64("sweep", "winnow_k", cfg.winnow_k);
  set_u64("sweep", "winnow_window", cfg.winnow_window);
  set_u64("sweep", "seed", cfg.seed);
  set_u64("sweep", "workers", cfg.workers);
  set_double("sampling", "temp_untrusted", cfg.temp_untrusted);
  set_double("sampling", "temp_benign", cfg.temp_benign);

  if (!kv.empty()) throw ConfigError("config: unknown key '" + kv.begin()->first + "'");
  cfg.validate();
  return cfg;
}

inline SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  return sweep_config_from_map(parse_ini(is));
}

// ---------------------------------------------------------------------------
// File loading helpers
// ---------------------------------------------------------------------------

inline std::vector<std::string> load_text_lines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open corpus file: " + path);
  std::vector<std::string> docs;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) docs.push_back(line);
  }
  if (docs.empty()) throw ConfigError("corpus file is empty: " + path);
  return docs;
}

inline std::shared_ptr<const Vocabulary> load_vocab_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open vocabulary file: " + path);
  return std::make_shared<const Vocabulary>(Vocabulary::load(is));
}

// Sniffs the container magic and loads whichever model type the file holds.
inline std::unique_ptr<LanguageModel> load_model_file(const std::string& path,
                                                      std::shared_ptr<const Vocabulary> vocab) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open model file: " + path);
  std::string magic = expect_line(is, "model header");
  is.seekg(0);
  if (magic == "ngram-v1")
    return std::make_unique<NGramModel>(NGramModel::load(is, std::move(vocab)));
  if (magic == "tinylm-v1")
    return std::make_unique<TinyNeuralLM>(TinyNeuralLM::load(is, std::move(vocab)));
  throw IntegrityError("unrecognized model container: " + magic);
}

inline std::vector<CraftedItem> load_crafted_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open crafted corpus: " + path);
  return load_crafted_jsonl(is);
}

// ---------------------------------------------------------------------------
// Cell evaluation
// ---------------------------------------------------------------------------

struct EvalData {
  std::vector<TokenSequence> prompts;
  std::vector<TokenSequence> references;
  std::vector<std::vector<TokenSequence>> secrets;
  std::vector<std::string> heldout_docs;

  static EvalData from_items(const Vocabulary& vocab, const std::vector<CraftedItem>& items,
                             std::vector<std::string> heldout) {
    EvalData data;
    for (const auto& item : items) {
      data.prompts.push_back(vocab.encode(item.prompt));
      data.references.push_back(vocab.encode(item.reference));
      std::vector<TokenSequence> tags;
      for (const auto& tag : item.secret_tags) tags.push_back(vocab.encode(tag));
      data.secrets.push_back(std::move(tags));
    }
    data.heldout_docs = std::move(heldout);
    return data;
  }
};

struct CellResult {
  std::string alpha_label;
  double temperature = 0.0;
  PromptMetrics metrics;  // aggregate over prompts
  double em_per_generation = 0.0;
  double heldout_ppl = 0.0;
  double mean_k_bound_bits = 0.0;
  double mean_max_kl_bits = 0.0;

  // The evaluation proper (leak metrics + standard-performance proxy);
  // certificates are ensemble-only and excluded so direct single-model rows
  // are comparable.
  std::string metrics_csv_fragment() const {
    std::ostringstream os;
    os << MetricReport::csv_row("", metrics).substr(1)  // drop the label column
       << ',' << format_double(heldout_ppl);
    return os.str();
  }

  std::string csv_row() const {
    std::ostringstream os;
    os << alpha_label << ',' << format_double(temperature) << ',' << metrics_csv_fragment() << ','
       << format_double(mean_k_bound_bits) << ',' << format_double(mean_max_kl_bits);
    return os.str();
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"alpha", alpha_label},
                          {"temperature", temperature},
                          {"em", metrics.em},
                          {"em_per_generation", em_per_generation},
                          {"lc", metrics.lc},
                          {"winnow", metrics.winnow},
                          {"kgram_count", metrics.kgram_count},
                          {"kgram_rate", metrics.kgram_rate},
                          {"heldout_ppl", heldout_ppl},
                          {"mean_k_bound_bits", mean_k_bound_bits},
                          {"mean_max_kl_bits", mean_max_kl_bits}};
  }

  static std::string csv_header() {
    return "alpha,temperature,ic4,ic8,pc4,pc8,em,lc,winnow,rate_ic4,rate_ic8,heldout_ppl,"
           "mean_k_bound_bits,mean_max_kl_bits";
  }
};

inline std::uint64_t generation_seed(std::uint64_t base, double temperature,
                                     std::size_t prompt_idx, std::size_t gen_idx) {
  return derive_seed(base, std::bit_cast<std::uint64_t>(temperature), prompt_idx, gen_idx);
}

struct CellSpec {
  AlphaSchedule alpha = AlphaSchedule::constant(1.0);
  double temperature = 1.0;
  std::string label;
};

inline CellResult evaluate_cell(const LanguageModel& lm_l, const LanguageModel& lm_s,
                                const EvalData& data, const SweepConfig& cfg,
                                const CellSpec& cell) {
  CellResult result;
  result.alpha_label = cell.label;
  result.temperature = cell.temperature;

  EnsembleSpec spec;
  spec.alpha = cell.alpha;
  spec.temp_untrusted = cfg.temp_untrusted;
  spec.temp_benign = cfg.temp_benign;
  spec.temp_sampling = cell.temperature;
  spec.max_length = cfg.max_length;

  std::vector<std::vector<TokenSequence>> generations(data.prompts.size());
  double k_bound_sum = 0.0, max_kl_sum = 0.0;
  std::size_t n_gens = 0;
  for (std::size_t pi = 0; pi < data.prompts.size(); ++pi) {
    generations[pi].reserve(cfg.generations_per_prompt);
    for (std::size_t g = 0; g < cfg.generations_per_prompt; ++g) {
      spec.seed = generation_seed(cfg.seed, cell.temperature, pi, g);
      DivergenceLedger ledger;
      GenerationRecord rec = sample_sequence(
          lm_l, lm_s, data.prompts[pi], spec,
          [&](std::size_t step, const StepDistributions& dists, TokenId) {
            ledger.add(make_ledger_row(step, dists));
          });
      k_bound_sum += ledger.cum_k_bound_bits;
      max_kl_sum += ledger.cum_max_kl_bits();
      ++n_gens;
      generations[pi].push_back(std::move(rec.output));
    }
  }

  MetricConfig mc;
  mc.kgram_ks = cfg.metric_ks;
  mc.winnow_k = cfg.winnow_k;
  mc.winnow_window = cfg.winnow_window;
  MetricReport report = evaluate_generations(generations, data.references, data.secrets, mc);
  result.metrics = report.aggregate;
  result.em_per_generation = report.em_per_generation;
  result.mean_k_bound_bits = k_bound_sum / static_cast<double>(n_gens);
  result.mean_max_kl_bits = max_kl_sum / static_cast<double>(n_gens);

  result.heldout_ppl = perplexity_under(
      [&](Context ctx) {
        return ensemble_step(lm_l, lm_s, ctx, spec, ctx.size()).p;
      },
      lm_l.vocab(), data.heldout_docs);
  return result;
}

// Direct single-model evaluation: the comparator for the alpha = 1 / alpha =
// 0 sweep endpoints. Uses the very same seed derivation and metric pipeline.
inline CellResult evaluate_single_model(const LanguageModel& model, double member_temperature,
                                        const EvalData& data, const SweepConfig& cfg,
                                        double temperature, const std::string& label) {
  CellResult result;
  result.alpha_label = label;
  result.temperature = temperature;

  std::vector<std::vector<TokenSequence>> generations(data.prompts.size());
  for (std::size_t pi = 0; pi < data.prompts.size(); ++pi) {
    generations[pi].reserve(cfg.generations_per_prompt);
    for (std::size_t g = 0; g < cfg.generations_per_prompt; ++g) {
      Rng rng(generation_seed(cfg.seed, temperature, pi, g));
      TokenSequence history = data.prompts[pi];
      TokenSequence output;
      for (std::size_t step = 0; step < cfg.max_length; ++step) {
        ProbVector p = model_distribution(model, make_context(history), member_temperature,
                                          temperature);
        TokenId chosen = static_cast<TokenId>(rng.sample_categorical(p));
        output.push_back(chosen);
        history.push_back(chosen);
        if (chosen == kEosId) break;
      }
      generations[pi].push_back(std::move(output));
    }
  }

  MetricConfig mc;
  mc.kgram_ks = cfg.metric_ks;
  mc.winnow_k = cfg.winnow_k;
  mc.winnow_window = cfg.winnow_window;
  MetricReport report = evaluate_generations(generations, data.references, data.secrets, mc);
  result.metrics = report.aggregate;
  result.em_per_generation = report.em_per_generation;

  result.heldout_ppl = perplexity_under(
      [&](Context ctx) { return model_distribution(model, ctx, member_temperature, temperature); },
      model.vocab(), data.heldout_docs);
  return result;
}

// ---------------------------------------------------------------------------
// Sweep driver
// ---------------------------------------------------------------------------

struct SweepResult {
  SweepConfig config;
  std::vector<CellResult> cells;  // (alpha-major, temperature-minor) order

  std::string to_csv() const {
    std::ostringstream os;
    os << CellResult::csv_header() << "\n";
    for (const auto& cell : cells) os << cell.csv_row() << "\n";
    return os.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& cell : cells) rows.push_back(cell.to_json());
    return nlohmann::json{{"config", config.to_json()}, {"cells", rows}};
  }
};

inline std::vector<CellResult> run_cells(const LanguageModel& lm_l, const LanguageModel& lm_s,
                                         const EvalData& data, const SweepConfig& cfg,
                                         const std::vector<CellSpec>& specs) {
  std::vector<CellResult> results(specs.size());
  std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, specs.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < specs.size(); ++i)
      results[i] = evaluate_cell(lm_l, lm_s, data, cfg, specs[i]);
    return results;
  }
  // Cells are independent; results land in their preassigned slots, so the
  // assembled output does not depend on scheduling.
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      try {
        results[i] = evaluate_cell(lm_l, lm_s, data, cfg, specs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

inline SweepResult run_sweep_loaded(const LanguageModel& lm_l, const LanguageModel& lm_s,
                                    const std::vector<CraftedItem>& items,
                                    const std::vector<std::string>& heldout_docs,
                                    const SweepConfig& cfg) {
  cfg.validate();
  if (lm_l.vocab().digest() != lm_s.vocab().digest())
    throw ConfigError("sweep: members do not share a vocabulary");
  EvalData data = EvalData::from_items(lm_l.vocab(), items, heldout_docs);
  std::vector<CellSpec> specs;
  for (double alpha : cfg.alpha_grid) {
    for (double t : cfg.temperature_grid) {
      specs.push_back(CellSpec{AlphaSchedule::constant(alpha), t, format_double(alpha)});
    }
  }
  SweepResult result;
  result.config = cfg;
  result.cells = run_cells(lm_l, lm_s, data, cfg, specs);
  return result;
}

inline SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  if (cfg.vocab.empty() || cfg.untrusted_model.empty() || cfg.benign_model.empty() ||
      cfg.crafted_corpus.empty() || cfg.heldout_corpus.empty())
    throw ConfigError("sweep: all [paths] entries must be set");
  auto vocab = load_vocab_file(cfg.vocab);
  auto lm_l = load_model_file(cfg.untrusted_model, vocab);
  auto lm_s = load_model_file(cfg.benign_model, vocab);
  auto items = load_crafted_file(cfg.crafted_corpus);
  auto heldout = load_text_lines(cfg.heldout_corpus);
  return run_sweep_loaded(*lm_l, *lm_s, items, heldout, cfg);
}

inline SweepResult run_schedule_experiment_loaded(const LanguageModel& lm_l,
                                                  const LanguageModel& lm_s,
                                                  const std::vector<CraftedItem>& items,
                                                  const std::vector<std::string>& heldout_docs,
                                                  const SweepConfig& cfg,
                                                  const AlphaSchedule& schedule) {
  cfg.validate();
  EvalData data = EvalData::from_items(lm_l.vocab(), items, heldout_docs);
  std::vector<CellSpec> specs;
  for (double t : cfg.temperature_grid)
    specs.push_back(CellSpec{schedule, t, schedule.to_string()});
  SweepResult result;
  result.config = cfg;
  result.cells = run_cells(lm_l, lm_s, data, cfg, specs);
  return result;
}

inline SweepResult run_schedule_experiment(const SweepConfig& cfg, const AlphaSchedule& schedule) {
  auto vocab = load_vocab_file(cfg.vocab);
  auto lm_l = load_model_file(cfg.untrusted_model, vocab);
  auto lm_s = load_model_file(cfg.benign_model, vocab);
  auto items = load_crafted_file(cfg.crafted_corpus);
  auto heldout = load_text_lines(cfg.heldout_corpus);
  return run_schedule_experiment_loaded(*lm_l, *lm_s, items, heldout, cfg, schedule);
}

// ---------------------------------------------------------------------------
// Certification driver
// ---------------------------------------------------------------------------

struct CertifySummary {
  std::size_t n_prompts = 0;
  double mean_cum_k_bound_bits = 0.0;
  double max_cum_k_bound_bits = 0.0;
  double mean_cum_max_kl_bits = 0.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"n_prompts", n_prompts},
                          {"mean_cum_k_bound", DivergenceLedger::json_real(mean_cum_k_bound_bits)},
                          {"max_cum_k_bound", DivergenceLedger::json_real(max_cum_k_bound_bits)},
                          {"mean_cum_max_kl_bits", mean_cum_max_kl_bits}};
  }
};

// One generation per prompt, certified step by step; rows and per-prompt
// summaries stream to `jsonl_out`, the aggregate comes back.
inline CertifySummary certify_command(const LanguageModel& lm_l, const LanguageModel& lm_s,
                                      const std::vector<TokenSequence>& prompts,
                                      const EnsembleSpec& base_spec,
                                      std::span<const double> eps_grid, std::ostream& jsonl_out) {
  if (prompts.empty()) throw ConfigError("certify: no prompts");
  CertifySummary summary;
  summary.n_prompts = prompts.size();
  for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
    EnsembleSpec spec = base_spec;
    spec.seed = derive_seed(base_spec.seed, pi);
    DivergenceLedger ledger;
    GenerationRecord rec =
        sample_sequence(lm_l, lm_s, prompts[pi], spec,
                        [&](std::size_t step, const StepDistributions& dists, TokenId) {
                          ledger.add(make_ledger_row(step, dists));
                        });
    ledger.y_bits = rec.y_bits;
    if (!ledger.y_bits.empty())
      ledger.concentration = estimate_concentration(ledger.y_bits, eps_grid);
    for (const auto& row : ledger.rows) {
      nlohmann::json j = ledger.row_json(row);
      j["prompt"] = pi;
      jsonl_out << j.dump() << "\n";
    }
    nlohmann::json s = ledger.summary_json();
    s["prompt"] = pi;
    jsonl_out << s.dump() << "\n";
    summary.mean_cum_k_bound_bits += ledger.cum_k_bound_bits;
    summary.mean_cum_max_kl_bits += ledger.cum_max_kl_bits();
    summary.max_cum_k_bound_bits = std::max(summary.max_cum_k_bound_bits, ledger.cum_k_bound_bits);
  }
  summary.mean_cum_k_bound_bits /= static_cast<double>(prompts.size());
  summary.mean_cum_max_kl_bits /= static_cast<double>(prompts.size());
  return summary;
}

}  // namespace purelm
