#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "heterformer/cli/run_config.hpp"
#include "heterformer/eval/clustering.hpp"
#include "heterformer/eval/link_eval.hpp"
#include "heterformer/eval/probe.hpp"
#include "heterformer/eval/retrieval.hpp"
#include "heterformer/graph/io.hpp"
#include "heterformer/train/checkpoint.hpp"
#include "heterformer/train/trainer.hpp"

namespace heterformer::cli {

using Log = std::function<void(const std::string&)>;

/// Loaded graph, vocabulary, tokenized texts and edge split. Held by pointer
/// because encoders keep references into it.
struct Workspace {
  graph::HeteroGraph graph;
  text::Vocabulary vocab;
  model::HeterformerConfig model_cfg;
  model::TokenizedCorpus corpus;
  std::size_t query_edge_type = 0;
  graph::EdgeSplit split;

  Workspace(graph::HeteroGraph g, text::Vocabulary v) : graph(std::move(g)), vocab(std::move(v)) {}
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  model::Encoder encoder() const { return model::Encoder(model_cfg, graph, corpus); }
};

inline void require_path(const std::string& path, const std::string& what) {
  if (path.empty()) throw ContractError("missing " + what + " path");
}

inline text::Vocabulary resolve_vocab(const RunConfig& rc, const graph::HeteroGraph& g) {
  if (!rc.vocab_path.empty()) return text::Vocabulary::load(rc.vocab_path);
  return text::build_vocab(g, rc.vocab_max_size, rc.vocab_min_count);
}

inline std::unique_ptr<Workspace> load_workspace(const RunConfig& rc) {
  require_path(rc.schema, "schema");
  require_path(rc.nodes, "nodes");
  require_path(rc.edges, "edges");
  auto g = graph::load_graph(rc.nodes, rc.edges, rc.schema);
  auto vocab = resolve_vocab(rc, g);
  auto ws = std::make_unique<Workspace>(std::move(g), std::move(vocab));
  ws->model_cfg = rc.model;
  ws->model_cfg.budgets = rc.resolve_budgets(ws->graph.schema());
  ws->model_cfg.validate();
  ws->corpus = model::TokenizedCorpus::build(ws->graph, ws->vocab, ws->model_cfg.seq_len);
  ws->query_edge_type = train::resolve_query_edge_type(ws->graph.schema(), rc.train.query_edge_type);
  ws->split = graph::split_edges(ws->graph, ws->query_edge_type, rc.train.fractions, rc.split_seed);
  return ws;
}

inline train::TrainConfig train_config(const RunConfig& rc) {
  auto t = rc.train;
  t.seed = rc.seed;
  return t;
}

inline model::ModelParams initial_params(const Workspace& ws, const RunConfig& rc) {
  return model::ModelParams::initialize(ws.model_cfg, ws.graph, ws.vocab.size(), rc.seed);
}

inline void load_params(const std::string& path, const Workspace& ws, model::ModelParams& p, const Log& log) {
  const auto c = train::load_checkpoint(path, model::structure_digest(ws.model_cfg), [&](const std::string& msg) {
    if (log) log(msg);
  });
  c.restore(p, ws.graph.schema());
}

struct TraceRow {
  std::string phase;
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> dev_prec;
};

struct TrainOutcome {
  train::FitResult fit;
  std::vector<TraceRow> trace;
  eval::LinkMetrics test;
  eval::LinkMetrics dev;
  std::uint64_t digest = 0;
};

/// Optional text-encoder pre-stage and warm-up, in place.
inline void prepare_textless(const Workspace& ws, const RunConfig& rc, model::ModelParams& p,
                             std::vector<TraceRow>& trace, const Log& log) {
  const auto tc = train_config(rc);
  if (tc.pretrain_epochs > 0) {
    const auto pre = train::pretrain_text_encoder(ws.model_cfg, ws.graph, ws.corpus, p, ws.split, tc,
                                                  [&](const train::EpochRecord& r) {
                                                    if (log) log("pretrain epoch " + std::to_string(r.epoch) +
                                                                 " loss " + fmt(r.train_loss) + " dev_prec " +
                                                                 fmt(r.dev_prec));
                                                  });
    for (const auto& r : pre.trace) trace.push_back({"pretrain", r.epoch, r.train_loss, r.dev_prec});
  }
  if (tc.warmup) {
    const auto enc = ws.encoder();
    const auto rep = train::warmup(enc, p, tc);
    for (std::size_t e = 0; e < rep.epoch_loss.size(); ++e) {
      trace.push_back({"warmup", e + 1, rep.epoch_loss[e], std::nullopt});
      if (log) log("warmup epoch " + std::to_string(e + 1) + " loss " + fmt(rep.epoch_loss[e]));
    }
  }
}

/// Full training recipe. With `from_checkpoint` the parameters in `p` are
/// taken as already prepared and pre-stage and warm-up are skipped.
inline TrainOutcome train_model(const Workspace& ws, const RunConfig& rc, model::ModelParams& p,
                                bool from_checkpoint, const Log& log) {
  TrainOutcome out;
  if (!from_checkpoint) prepare_textless(ws, rc, p, out.trace, log);
  const auto enc = ws.encoder();
  const auto tc = train_config(rc);
  out.fit = train::fit(enc, p, ws.split, tc, [&](const train::EpochRecord& r) {
    if (log) log("epoch " + std::to_string(r.epoch) + " loss " + fmt(r.train_loss) + " dev_prec " + fmt(r.dev_prec));
  });
  for (const auto& r : out.fit.trace) out.trace.push_back({"train", r.epoch, r.train_loss, r.dev_prec});
  const auto seed = train::eval_sample_seed(tc.seed);
  out.test = eval::metrics(eval::evaluate_links(enc, p, ws.split.test, tc.test_batch_size, seed));
  out.dev = eval::metrics(eval::evaluate_links(enc, p, ws.split.dev, tc.test_batch_size, seed));
  out.digest = train::checkpoint_digest(out.fit.best);
  return out;
}

/// Writes to a sibling temporary and renames, so a failed command never
/// leaves a half-written artifact under its final name.
inline void write_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << content;
    if (!out) throw IoError("short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string s = "phase,epoch,loss,dev_prec\n";
  char buf[64];
  for (const auto& r : rows) {
    s += r.phase + ',' + std::to_string(r.epoch) + ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.loss);
    s += buf;
    s += ',';
    if (r.dev_prec) {
      std::snprintf(buf, sizeof(buf), "%.17g", *r.dev_prec);
      s += buf;
    }
    s += '\n';
  }
  return s;
}

inline std::string hex_digest(std::uint64_t d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

/// `[section]` blocks of `key = value` lines.
class MetricsReport {
 public:
  void add(const std::string& section, const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    add_text(section, key, buf);
  }
  void add_text(const std::string& section, const std::string& key, const std::string& value) {
    if (sections_.empty() || sections_.back().first != section) sections_.push_back({section, {}});
    sections_.back().second += key + " = " + value + "\n";
  }
  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      if (i) s += '\n';
      s += "[" + sections_[i].first + "]\n" + sections_[i].second;
    }
    return s;
  }

 private:
  std::vector<std::pair<std::string, std::string>> sections_;
};

inline void add_link(MetricsReport& r, const std::string& section, const eval::LinkMetrics& m) {
  r.add(section, "prec", m.prec);
  r.add(section, "mrr", m.mrr);
  r.add(section, "ndcg", m.ndcg);
}

/// Embedding rows and labels of labeled nodes, split by text-richness.
struct LabeledEmbeddings {
  numcore::Tensor x;
  std::vector<std::size_t> y;
  std::size_t classes = 0;
};

inline LabeledEmbeddings labeled_rows(const eval::NodeEmbeddings& e, const graph::HeteroGraph& g,
                                      const std::map<std::string, std::size_t>& labels, bool text_rich) {
  std::vector<std::size_t> idx;
  LabeledEmbeddings out;
  for (std::size_t i = 0; i < e.ids.size(); ++i) {
    if (g.is_text_rich(g.require(e.ids[i])) != text_rich) continue;
    auto it = labels.find(e.ids[i]);
    if (it == labels.end()) continue;
    idx.push_back(i);
    out.y.push_back(it->second);
    out.classes = std::max(out.classes, it->second + 1);
  }
  if (!idx.empty()) {
    numcore::NoTapeScope no_tape;
    out.x = numcore::gather_rows(e.matrix, idx);
  }
  return out;
}

inline eval::ProbeResult run_probe(const LabeledEmbeddings& data, const eval::ProbeConfig& cfg, std::uint64_t split_seed,
                                   const Log& log) {
  if (data.y.size() < 3) throw ContractError("probe: fewer than three labeled nodes");
  const auto s = eval::split_indices(data.y.size(), 0.7, 0.1, split_seed);
  return eval::linear_probe(eval::take(data.x, data.y, s.train), eval::take(data.x, data.y, s.dev),
                            eval::take(data.x, data.y, s.test), data.classes, cfg, log);
}

inline eval::ClusterMetrics run_clustering(const LabeledEmbeddings& data, std::uint64_t seed, std::size_t restarts) {
  const std::set<std::size_t> distinct(data.y.begin(), data.y.end());
  const auto km = eval::kmeans(data.x, distinct.size(), seed, restarts);
  return eval::cluster_metrics(km.assignment, data.y);
}

}  // namespace heterformer::cli
