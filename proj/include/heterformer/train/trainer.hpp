#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "heterformer/eval/link_eval.hpp"
#include "heterformer/graph/split.hpp"
#include "heterformer/model/encoder.hpp"
#include "heterformer/train/adam.hpp"
#include "heterformer/train/checkpoint.hpp"
#include "heterformer/train/loss.hpp"

namespace heterformer::train {

struct TrainConfig {
  AdamConfig adam;                 // lr 1e-5, weight decay 1e-3, eps 1e-8
  std::size_t batch_size = 30;
  std::size_t test_batch_size = 50;
  std::size_t patience = 3;
  std::size_t max_epochs = 30;
  bool warmup = true;
  std::size_t warmup_epochs = 5;
  double warmup_lr = 1e-3;
  std::size_t pretrain_epochs = 0;  // no_agg pre-stage before warm-up; 0 disables it
  std::uint64_t seed = 42;
  std::string query_edge_type;     // empty: first edge type joining two text-rich types
  graph::SplitFractions fractions;

  void validate() const {
    if (batch_size < 2) throw ContractError("train batch size must be at least 2 (in-batch negatives)");
    if (test_batch_size < 2) throw ContractError("test batch size must be at least 2");
    if (patience < 1) throw ContractError("patience must be at least 1");
  }
};

/// Stops once the tracked value has not improved for `patience` epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Returns true when the value is a new best.
  bool observe(double value) {
    if (!has_best_ || value > best_) {
      best_ = value;
      has_best_ = true;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }
  bool should_stop() const { return stale_ >= patience_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t stale_ = 0;
  double best_ = 0.0;
  bool has_best_ = false;
};

inline std::size_t resolve_query_edge_type(const graph::NodeTypeSchema& schema, const std::string& name) {
  if (!name.empty()) {
    const auto t = schema.edge_type_index(name);
    const auto& e = schema.edge_type(t);
    if (!schema.is_text_rich(e.src_type) ||
        !schema.is_text_rich(e.dst_type)) {
      throw ContractError("query edge type '" + name + "' must join two text-rich node types");
    }
    return t;
  }
  for (std::size_t t = 0; t < schema.edge_types().size(); ++t) {
    const auto& e = schema.edge_type(t);
    if (schema.is_text_rich(e.src_type) &&
        schema.is_text_rich(e.dst_type)) {
      return t;
    }
  }
  throw ContractError("schema has no edge type between text-rich node types to predict");
}

/// Train partners per anchor, for one positive pair per anchor per epoch.
struct PairSource {
  std::vector<graph::NodeIndex> anchors;
  std::vector<std::vector<graph::NodeIndex>> partners;

  static PairSource from_edges(const std::vector<graph::Edge>& edges, std::size_t num_nodes) {
    std::vector<std::vector<graph::NodeIndex>> adj(num_nodes);
    for (const auto& e : edges) {
      adj[e.src].push_back(e.dst);
      adj[e.dst].push_back(e.src);
    }
    PairSource s;
    for (graph::NodeIndex n = 0; n < num_nodes; ++n) {
      if (adj[n].empty()) continue;
      std::sort(adj[n].begin(), adj[n].end());
      s.anchors.push_back(n);
      s.partners.push_back(std::move(adj[n]));
    }
    return s;
  }

  std::vector<std::pair<graph::NodeIndex, graph::NodeIndex>> epoch_pairs(std::uint64_t seed, std::uint64_t epoch) const {
    numcore::Rng rng(numcore::derive_seed(seed, {0x9a125ULL, epoch}));
    std::vector<std::size_t> order(anchors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::pair<graph::NodeIndex, graph::NodeIndex>> pairs;
    pairs.reserve(order.size());
    for (auto i : order) {
      std::uniform_int_distribution<std::size_t> pick(0, partners[i].size() - 1);
      pairs.emplace_back(anchors[i], partners[i][pick(rng)]);
    }
    return pairs;
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_prec = 0.0;
};

struct FitResult {
  Checkpoint best;
  std::vector<EpochRecord> trace;
  std::size_t best_epoch = 0;
  double best_dev_prec = 0.0;
};

using ProgressFn = std::function<void(const EpochRecord&)>;

inline std::uint64_t eval_sample_seed(std::uint64_t seed) { return numcore::derive_seed(seed, {0xe7a1ULL}); }

/// One pass of link-loss training over the epoch's positive pairs.
inline double train_epoch(const model::Encoder& enc, model::ModelParams& p, const graph::NodeTypeSchema& schema,
                          const PairSource& pairs, std::size_t epoch, const TrainConfig& cfg, OptimizerState& opt,
                          std::vector<model::NamedParameter>& trainable) {
  const auto all = pairs.epoch_pairs(cfg.seed, epoch);
  const std::uint64_t sample_seed = numcore::derive_seed(cfg.seed, {0x7a1aULL, epoch});
  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start + 1 < all.size(); start += cfg.batch_size) {
    const auto end = std::min(all.size(), start + cfg.batch_size);
    std::vector<graph::NodeIndex> q, k;
    for (std::size_t i = start; i < end; ++i) {
      q.push_back(all[i].first);
      k.push_back(all[i].second);
    }
    p.zero_grad(schema);
    numcore::Tape tape;
    double value;
    {
      numcore::TapeScope scope(tape);
      model::StateCache cache;
      const Tensor qe = eval::encode_batch(enc, p, q, numcore::derive_seed(sample_seed, {start}), &cache);
      const Tensor ke = eval::encode_batch(enc, p, k, numcore::derive_seed(sample_seed, {start}), &cache);
      const Tensor loss = link_loss(qe, ke);
      value = loss.item();
      if (!std::isfinite(value)) throw NumericError("link loss became non-finite in epoch " + std::to_string(epoch));
      tape.backward(loss);
    }
    adam_step(trainable, opt, cfg.adam);
    loss_sum += value;
    ++batches;
  }
  return batches ? loss_sum / static_cast<double>(batches) : 0.0;
}

/// Link-prediction training with dev-PREC early stopping. On return `p`
/// holds the best parameters.
inline FitResult fit(const model::Encoder& enc, model::ModelParams& p, const graph::EdgeSplit& split,
                     const TrainConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  if (split.train.empty()) throw ContractError("fit: empty train split");
  const auto& g = enc.graph();
  const auto& schema = g.schema();
  const auto pairs = PairSource::from_edges(split.train, g.num_nodes());
  auto trainable = p.named_parameters(schema);
  auto opt = OptimizerState::for_parameters(trainable);
  EarlyStopper stopper(cfg.patience);
  FitResult result;
  result.best = Checkpoint::capture(p, schema, enc.config(), &opt);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_epoch(enc, p, schema, pairs, epoch, cfg, opt, trainable);
    const auto dev = split.dev.size() >= 2
                         ? eval::evaluate_links(enc, p, split.dev, cfg.test_batch_size, eval_sample_seed(cfg.seed))
                         : eval::RankingResult{};
    rec.dev_prec = eval::metrics(dev).prec;
    result.trace.push_back(rec);
    if (progress) progress(rec);
    if (stopper.observe(rec.dev_prec)) {
      result.best = Checkpoint::capture(p, schema, enc.config(), &opt);
      result.best.epoch = epoch;
      result.best.best_dev_prec = rec.dev_prec;
      result.best_epoch = epoch;
      result.best_dev_prec = rec.dev_prec;
    }
    if (stopper.should_stop()) break;
  }
  result.best.restore(p, schema);
  return result;
}

struct WarmupReport {
  std::size_t epochs = 0;
  std::size_t textless_nodes = 0;
  std::size_t skipped = 0;  // textless nodes without a text-rich neighbor
  std::vector<double> epoch_loss;
};

/// Trains only z and W_phi (layer 1) so projected textless embeddings match
/// frozen text-only embeddings of a neighboring text-rich node, then copies
/// the layer-1 projections into the deeper layers.
inline WarmupReport warmup(const model::Encoder& enc, model::ModelParams& p, const TrainConfig& cfg) {
  cfg.validate();
  const auto& g = enc.graph();
  const auto& schema = g.schema();
  WarmupReport report;

  std::vector<graph::NodeIndex> nodes;
  std::vector<std::vector<graph::NodeIndex>> text_neighbors;
  for (graph::NodeIndex v = 0; v < g.num_nodes(); ++v) {
    if (g.is_text_rich(v)) continue;
    std::vector<graph::NodeIndex> nb;
    for (std::size_t t = 0; t < schema.edge_types().size(); ++t) {
      for (auto u : g.neighbors(v, t))
        if (g.is_text_rich(u)) nb.push_back(u);
    }
    if (nb.empty()) {
      ++report.skipped;
      continue;
    }
    std::sort(nb.begin(), nb.end());
    nodes.push_back(v);
    text_neighbors.push_back(std::move(nb));
  }
  report.textless_nodes = nodes.size();
  if (nodes.size() < 2 || cfg.warmup_epochs == 0) return report;

  // Frozen text side: text-only encodings under the current parameters.
  std::vector<Tensor> frozen(g.num_nodes());
  {
    numcore::NoTapeScope no_tape;
    for (graph::NodeIndex u = 0; u < g.num_nodes(); ++u) {
      if (g.is_text_rich(u)) frozen[u] = enc.encode_text_only(u, p, nullptr).detach();
    }
  }

  std::vector<model::NamedParameter> trainable;
  for (auto& np : p.named_parameters(schema)) {
    if (np.textless && (np.name == "textless.z" || np.name.ends_with(".layer1"))) trainable.push_back(np);
  }
  auto opt = OptimizerState::for_parameters(trainable);
  AdamConfig adam = cfg.adam;
  adam.lr = cfg.warmup_lr;

  for (std::size_t epoch = 1; epoch <= cfg.warmup_epochs; ++epoch) {
    numcore::Rng rng(numcore::derive_seed(cfg.seed, {0x3a4dULL, epoch}));
    std::vector<std::size_t> order(nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start + 1 < order.size(); start += cfg.batch_size) {
      const auto end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Tensor> keys;
      std::vector<graph::NodeIndex> batch;
      for (std::size_t i = start; i < end; ++i) {
        const auto& nb = text_neighbors[order[i]];
        std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
        batch.push_back(nodes[order[i]]);
        keys.push_back(frozen[nb[pick(rng)]]);
      }
      for (auto& np : trainable) np.tensor.zero_grad();
      numcore::Tape tape;
      double value;
      {
        numcore::TapeScope scope(tape);
        std::vector<Tensor> queries;
        for (auto v : batch) queries.push_back(enc.textless_embedding(v, p));
        const Tensor loss = warmup_loss(numcore::concat_rows(queries), numcore::concat_rows(keys));
        value = loss.item();
        tape.backward(loss);
      }
      adam_step(trainable, opt, adam);
      loss_sum += value;
      ++batches;
    }
    report.epoch_loss.push_back(batches ? loss_sum / static_cast<double>(batches) : 0.0);
    ++report.epochs;
  }

  for (auto& per_layer : p.textless.projections) {
    for (std::size_t l = 1; l < per_layer.size(); ++l) {
      auto dst = per_layer[l].mutable_data();
      const auto src = per_layer[0].data();
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return report;
}

/// Text-encoder pre-stage: the no_agg model trained on the query edges, so
/// that warm-up has a meaningful frozen target.
inline FitResult pretrain_text_encoder(const model::HeterformerConfig& model_cfg, const graph::HeteroGraph& g,
                                       const model::TokenizedCorpus& corpus, model::ModelParams& p,
                                       const graph::EdgeSplit& split, const TrainConfig& cfg,
                                       const ProgressFn& progress = {}) {
  auto text_cfg = model_cfg;
  text_cfg.ablation = model::Ablation::no_agg;
  text_cfg.architecture = model::Architecture::nested;
  const model::Encoder text_enc(text_cfg, g, corpus);
  auto stage = cfg;
  stage.max_epochs = cfg.pretrain_epochs;
  stage.seed = numcore::derive_seed(cfg.seed, {0x9e57a9eULL});
  return fit(text_enc, p, split, stage, progress);
}

}  // namespace heterformer::train
