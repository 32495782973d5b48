#pragma once

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "heterformer/bench/complexity.hpp"
#include "heterformer/eval/probe.hpp"
#include "heterformer/model/config.hpp"
#include "heterformer/synth/generator.hpp"
#include "heterformer/train/trainer.hpp"

namespace heterformer::cli {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty() || v[0] == '-') throw ContractError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw ContractError("config key '" + key + "': expected a number, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ContractError("config key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_size(key, trim(item)));
  if (out.empty()) throw ContractError("config key '" + key + "': expected a comma-separated list");
  return out;
}

inline std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// Every tunable of every command, with defaults. Resolution order: command
/// line flag, then config file, then default. The seed additionally falls
/// back to HETERFORMER_SEED when neither flag nor file sets it.
struct RunConfig {
  std::string schema, nodes, edges, labels, vocab_path;
  std::string out = "out";
  std::string ckpt;
  std::uint64_t seed = 42;
  bool seed_set = false;
  std::uint64_t split_seed = 1;  // edge and probe splits; independent of the training seed

  model::HeterformerConfig model;
  std::string budgets_text = "";  // resolved against the schema once it is loaded
  std::size_t default_budget = 5;
  train::TrainConfig train;
  eval::ProbeConfig probe;
  double probe_textless_lr = 1e-2;
  std::size_t kmeans_restarts = 10;
  std::size_t vocab_max_size = 30000;
  std::size_t vocab_min_count = 1;
  synth::SynthConfig synth;
  bench::BenchConfig bench;

  using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

  static const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"data.schema", [](RunConfig& c, auto&, auto& v) { c.schema = v; }},
        {"data.nodes", [](RunConfig& c, auto&, auto& v) { c.nodes = v; }},
        {"data.edges", [](RunConfig& c, auto&, auto& v) { c.edges = v; }},
        {"data.labels", [](RunConfig& c, auto&, auto& v) { c.labels = v; }},
        {"data.vocab", [](RunConfig& c, auto&, auto& v) { c.vocab_path = v; }},
        {"out", [](RunConfig& c, auto&, auto& v) { c.out = v; }},
        {"ckpt", [](RunConfig& c, auto&, auto& v) { c.ckpt = v; }},
        {"seed",
         [](RunConfig& c, auto& k, auto& v) {
           c.seed = to_size(k, v);
           c.seed_set = true;
         }},
        {"split_seed", [](RunConfig& c, auto& k, auto& v) { c.split_seed = to_size(k, v); }},
        {"model.dim", [](RunConfig& c, auto& k, auto& v) { c.model.dim = to_size(k, v); }},
        {"model.heads", [](RunConfig& c, auto& k, auto& v) { c.model.heads = to_size(k, v); }},
        {"model.layers", [](RunConfig& c, auto& k, auto& v) { c.model.layers = to_size(k, v); }},
        {"model.seq_len", [](RunConfig& c, auto& k, auto& v) { c.model.seq_len = to_size(k, v); }},
        {"model.mlp_hidden", [](RunConfig& c, auto& k, auto& v) { c.model.mlp_hidden = to_size(k, v); }},
        {"model.textless_dim", [](RunConfig& c, auto& k, auto& v) { c.model.textless_dim = to_size(k, v); }},
        {"model.budgets", [](RunConfig& c, auto&, auto& v) { c.budgets_text = v; }},
        {"model.default_budget", [](RunConfig& c, auto& k, auto& v) { c.default_budget = to_size(k, v); }},
        {"model.ablation", [](RunConfig& c, auto&, auto& v) { c.model.ablation = model::parse_ablation(v); }},
        {"model.arch", [](RunConfig& c, auto&, auto& v) { c.model.architecture = model::parse_architecture(v); }},
        {"model.init_std", [](RunConfig& c, auto& k, auto& v) { c.model.init_std = to_double(k, v); }},
        {"model.layer_norm_eps", [](RunConfig& c, auto& k, auto& v) { c.model.layer_norm_eps = to_double(k, v); }},
        {"train.lr", [](RunConfig& c, auto& k, auto& v) { c.train.adam.lr = to_double(k, v); }},
        {"train.weight_decay", [](RunConfig& c, auto& k, auto& v) { c.train.adam.weight_decay = to_double(k, v); }},
        {"train.adam_eps", [](RunConfig& c, auto& k, auto& v) { c.train.adam.eps = to_double(k, v); }},
        {"train.batch_size", [](RunConfig& c, auto& k, auto& v) { c.train.batch_size = to_size(k, v); }},
        {"train.test_batch_size", [](RunConfig& c, auto& k, auto& v) { c.train.test_batch_size = to_size(k, v); }},
        {"train.patience", [](RunConfig& c, auto& k, auto& v) { c.train.patience = to_size(k, v); }},
        {"train.max_epochs", [](RunConfig& c, auto& k, auto& v) { c.train.max_epochs = to_size(k, v); }},
        {"train.warmup", [](RunConfig& c, auto& k, auto& v) { c.train.warmup = to_bool(k, v); }},
        {"train.warmup_epochs", [](RunConfig& c, auto& k, auto& v) { c.train.warmup_epochs = to_size(k, v); }},
        {"train.warmup_lr", [](RunConfig& c, auto& k, auto& v) { c.train.warmup_lr = to_double(k, v); }},
        {"train.pretrain_epochs", [](RunConfig& c, auto& k, auto& v) { c.train.pretrain_epochs = to_size(k, v); }},
        {"train.query_edge_type", [](RunConfig& c, auto&, auto& v) { c.train.query_edge_type = v; }},
        {"eval.probe_hidden", [](RunConfig& c, auto& k, auto& v) { c.probe.hidden = to_size(k, v); }},
        {"eval.probe_layers", [](RunConfig& c, auto& k, auto& v) { c.probe.hidden_layers = to_size(k, v); }},
        {"eval.probe_lr", [](RunConfig& c, auto& k, auto& v) { c.probe.lr = to_double(k, v); }},
        {"eval.probe_textless_lr", [](RunConfig& c, auto& k, auto& v) { c.probe_textless_lr = to_double(k, v); }},
        {"eval.probe_patience", [](RunConfig& c, auto& k, auto& v) { c.probe.patience = to_size(k, v); }},
        {"eval.probe_max_epochs", [](RunConfig& c, auto& k, auto& v) { c.probe.max_epochs = to_size(k, v); }},
        {"eval.kmeans_restarts", [](RunConfig& c, auto& k, auto& v) { c.kmeans_restarts = to_size(k, v); }},
        {"vocab.max_size", [](RunConfig& c, auto& k, auto& v) { c.vocab_max_size = to_size(k, v); }},
        {"vocab.min_count", [](RunConfig& c, auto& k, auto& v) { c.vocab_min_count = to_size(k, v); }},
        {"synth.topics", [](RunConfig& c, auto& k, auto& v) { c.synth.topics = to_size(k, v); }},
        {"synth.text_rich_count", [](RunConfig& c, auto& k, auto& v) { c.synth.text_rich_count = to_size(k, v); }},
        {"synth.textless_count",
         [](RunConfig& c, auto& k, auto& v) {
           for (auto& t : c.synth.textless) t.count = to_size(k, v);
         }},
        {"synth.textless_degree",
         [](RunConfig& c, auto& k, auto& v) {
           for (auto& t : c.synth.textless) t.degree = to_size(k, v);
         }},
        {"synth.vocab_size", [](RunConfig& c, auto& k, auto& v) { c.synth.vocab_size = to_size(k, v); }},
        {"synth.words_per_doc", [](RunConfig& c, auto& k, auto& v) { c.synth.words_per_doc = to_size(k, v); }},
        {"synth.concentration", [](RunConfig& c, auto& k, auto& v) { c.synth.concentration = to_double(k, v); }},
        {"synth.background", [](RunConfig& c, auto& k, auto& v) { c.synth.background = to_double(k, v); }},
        {"synth.p_in", [](RunConfig& c, auto& k, auto& v) { c.synth.p_in = to_double(k, v); }},
        {"synth.p_out", [](RunConfig& c, auto& k, auto& v) { c.synth.p_out = to_double(k, v); }},
        {"synth.beta", [](RunConfig& c, auto& k, auto& v) { c.synth.beta = to_double(k, v); }},
        {"synth.locality", [](RunConfig& c, auto& k, auto& v) { c.synth.locality = to_double(k, v); }},
        {"bench.dim", [](RunConfig& c, auto& k, auto& v) { c.bench.dim = to_size(k, v); }},
        {"bench.heads", [](RunConfig& c, auto& k, auto& v) { c.bench.heads = to_size(k, v); }},
        {"bench.textless_dim", [](RunConfig& c, auto& k, auto& v) { c.bench.textless_dim = to_size(k, v); }},
        {"bench.P", [](RunConfig& c, auto& k, auto& v) { c.bench.P = to_sizes(k, v); }},
        {"bench.M", [](RunConfig& c, auto& k, auto& v) { c.bench.M = to_sizes(k, v); }},
        {"bench.N", [](RunConfig& c, auto& k, auto& v) { c.bench.N = to_sizes(k, v); }},
        {"bench.repetitions", [](RunConfig& c, auto& k, auto& v) { c.bench.repetitions = to_size(k, v); }},
    };
    return table;
  }

  void set(const std::string& key, const std::string& value) {
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) throw ContractError("unknown config key '" + key + "'");
    it->second(*this, key, value);
  }

  /// `key = value` lines; `#` starts a comment.
  void apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
      try {
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
      } catch (const ContractError& e) {
        throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  /// Budgets for `schema`: explicit per-type counts over a uniform default.
  graph::Budgets resolve_budgets(const graph::NodeTypeSchema& schema) const {
    auto b = graph::Budgets::uniform(schema, default_budget);
    std::stringstream ss(budgets_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ContractError("budget entry '" + item + "' is not type=count");
      const auto t = schema.edge_type_index(trim(item.substr(0, eq)));
      b.at(t) = graph::Budgets::parse(item, schema)[t];
    }
    return b;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "data.schema = " << schema << '\n'
       << "data.nodes = " << nodes << '\n'
       << "data.edges = " << edges << '\n'
       << "data.labels = " << labels << '\n'
       << "data.vocab = " << vocab_path << '\n'
       << "out = " << out << '\n'
       << "ckpt = " << ckpt << '\n'
       << "seed = " << seed << '\n'
       << "split_seed = " << split_seed << '\n'
       << "model.dim = " << model.dim << '\n'
       << "model.heads = " << model.heads << '\n'
       << "model.layers = " << model.layers << '\n'
       << "model.seq_len = " << model.seq_len << '\n'
       << "model.mlp_hidden = " << model.ffn_width() << '\n'
       << "model.textless_dim = " << model.textless_dim << '\n'
       << "model.budgets = " << budgets_text << '\n'
       << "model.default_budget = " << default_budget << '\n'
       << "model.ablation = " << model::to_string(model.ablation) << '\n'
       << "model.arch = " << model::to_string(model.architecture) << '\n'
       << "model.init_std = " << fmt(model.init_std) << '\n'
       << "model.layer_norm_eps = " << fmt(model.layer_norm_eps) << '\n'
       << "train.lr = " << fmt(train.adam.lr) << '\n'
       << "train.weight_decay = " << fmt(train.adam.weight_decay) << '\n'
       << "train.adam_eps = " << fmt(train.adam.eps) << '\n'
       << "train.batch_size = " << train.batch_size << '\n'
       << "train.test_batch_size = " << train.test_batch_size << '\n'
       << "train.patience = " << train.patience << '\n'
       << "train.max_epochs = " << train.max_epochs << '\n'
       << "train.warmup = " << (train.warmup ? "true" : "false") << '\n'
       << "train.warmup_epochs = " << train.warmup_epochs << '\n'
       << "train.warmup_lr = " << fmt(train.warmup_lr) << '\n'
       << "train.pretrain_epochs = " << train.pretrain_epochs << '\n'
       << "train.query_edge_type = " << train.query_edge_type << '\n'
       << "eval.probe_hidden = " << probe.hidden << '\n'
       << "eval.probe_layers = " << probe.hidden_layers << '\n'
       << "eval.probe_lr = " << fmt(probe.lr) << '\n'
       << "eval.probe_textless_lr = " << fmt(probe_textless_lr) << '\n'
       << "eval.probe_patience = " << probe.patience << '\n'
       << "eval.probe_max_epochs = " << probe.max_epochs << '\n'
       << "eval.kmeans_restarts = " << kmeans_restarts << '\n'
       << "vocab.max_size = " << vocab_max_size << '\n'
       << "vocab.min_count = " << vocab_min_count << '\n'
       << "synth.topics = " << synth.topics << '\n'
       << "synth.text_rich_count = " << synth.text_rich_count << '\n'
       << "synth.textless_count = " << (synth.textless.empty() ? 0 : synth.textless.front().count) << '\n'
       << "synth.textless_degree = " << (synth.textless.empty() ? 0 : synth.textless.front().degree) << '\n'
       << "synth.vocab_size = " << synth.vocab_size << '\n'
       << "synth.words_per_doc = " << synth.words_per_doc << '\n'
       << "synth.concentration = " << fmt(synth.concentration) << '\n'
       << "synth.background = " << fmt(synth.background) << '\n'
       << "synth.p_in = " << fmt(synth.p_in) << '\n'
       << "synth.p_out = " << fmt(synth.p_out) << '\n'
       << "synth.beta = " << fmt(synth.beta) << '\n'
       << "synth.locality = " << fmt(synth.locality) << '\n'
       << "bench.dim = " << bench.dim << '\n'
       << "bench.heads = " << bench.heads << '\n'
       << "bench.textless_dim = " << bench.textless_dim << '\n'
       << "bench.P = " << join(bench.P) << '\n'
       << "bench.M = " << join(bench.M) << '\n'
       << "bench.N = " << join(bench.N) << '\n'
       << "bench.repetitions = " << bench.repetitions << '\n';
    return os.str();
  }
};

}  // namespace heterformer::cli
