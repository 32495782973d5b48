#pragma once

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "heterformer/bench/complexity.hpp"
#include "heterformer/cli/pipeline.hpp"
#include "heterformer/synth/generator.hpp"

namespace heterformer::cli {

struct FlagBinding {
  const char* flag;
  const char* key;
  const char* help;
};

inline const std::vector<FlagBinding>& flag_bindings() {
  static const std::vector<FlagBinding> b = {
      {"--schema", "data.schema", "schema file"},
      {"--nodes", "data.nodes", "nodes file (id, type, text)"},
      {"--edges", "data.edges", "edges file (src, dst, type)"},
      {"--labels", "data.labels", "labels file (id, label)"},
      {"--vocab", "data.vocab", "vocabulary file; built from the corpus when absent"},
      {"--seed", "seed", "training and sampling seed"},
      {"--split-seed", "split_seed", "seed of the edge and probe splits"},
      {"--out", "out", "output directory"},
      {"--ckpt", "ckpt", "checkpoint to start from or evaluate"},
      {"--batch-size", "train.batch_size", "training batch size"},
      {"--test-batch-size", "train.test_batch_size", "evaluation batch size"},
      {"--lr", "train.lr", "learning rate"},
      {"--max-epochs", "train.max_epochs", "epoch limit"},
      {"--patience", "train.patience", "early-stopping patience"},
      {"--warmup-epochs", "train.warmup_epochs", "warm-up epochs"},
      {"--pretrain-epochs", "train.pretrain_epochs", "text-encoder pre-stage epochs (0 disables)"},
      {"--dim", "model.dim", "hidden width d"},
      {"--heads", "model.heads", "attention heads k"},
      {"--layers", "model.layers", "nested layers L"},
      {"--seq-len", "model.seq_len", "tokens per text, [CLS] included"},
      {"--textless-dim", "model.textless_dim", "textless embedding width"},
      {"--ablation", "model.ablation", "full|no_agg|no_tr|no_tl"},
      {"--arch", "model.arch", "nested|cascaded"},
      {"--budgets", "model.budgets", "per-edge-type neighbor budgets, type=count,..."},
  };
  return b;
}

/// Flag values captured by CLI11 for one subcommand.
struct ParsedFlags {
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::Option*, std::string>> bound;
  std::string config, data;
  std::vector<std::string> sets;
  bool no_warmup = false;
  CLI::Option* no_warmup_opt = nullptr;
};

inline void add_common(CLI::App* sub, ParsedFlags& f) {
  sub->add_option("--config", f.config, "config file of key = value lines");
  sub->add_option("--data", f.data, "directory holding schema.txt, nodes.tsv, edges.tsv, labels.tsv");
  for (const auto& b : flag_bindings()) {
    auto* opt = sub->add_option(b.flag, f.values[b.key], b.help);
    f.bound.emplace_back(opt, b.key);
  }
  f.no_warmup_opt = sub->add_flag("--no-warmup", f.no_warmup, "skip textless warm-up");
  sub->add_option("--set", f.sets, "override any config key: key=value (repeatable)");
}

/// Defaults, then config file, then HETERFORMER_SEED (seed only, when unset),
/// then flags.
inline RunConfig resolve(const ParsedFlags& f) {
  RunConfig rc;
  if (!f.config.empty()) rc.apply_file(f.config);
  if (!rc.seed_set) {
    if (const char* env = std::getenv("HETERFORMER_SEED"); env && *env) rc.set("seed", env);
  }
  if (!f.data.empty()) {
    const auto files = synth::NetworkFiles::in(f.data);
    rc.schema = files.schema;
    rc.nodes = files.nodes;
    rc.edges = files.edges;
    rc.labels = files.labels;
  }
  for (const auto& [opt, key] : f.bound) {
    if (opt->count() > 0) rc.set(key, f.values.at(key));
  }
  if (f.no_warmup) rc.train.warmup = false;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ContractError("--set expects key=value, got '" + s + "'");
    rc.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return rc;
}

inline std::string out_path(const RunConfig& rc, const std::string& name) {
  return (std::filesystem::path(rc.out) / name).string();
}

inline void prepare_out(const RunConfig& rc) {
  std::filesystem::create_directories(rc.out);
  write_atomically(out_path(rc, "config.txt"), rc.to_text());
}

inline int cmd_generate(RunConfig rc, std::ostream& out) {
  rc.synth.seed = rc.seed;
  prepare_out(rc);
  const auto net = synth::generate(rc.synth);
  const auto files = synth::write_network(net, rc.out);
  out << "wrote " << net.graph.num_nodes() << " nodes and " << net.graph.num_edges() << " edges to " << rc.out << '\n';
  out << "schema " << files.schema << "\nnodes " << files.nodes << "\nedges " << files.edges << "\nlabels "
      << files.labels << '\n';
  return 0;
}

inline int cmd_vocab(const RunConfig& rc, std::ostream& out) {
  require_path(rc.schema, "schema");
  require_path(rc.nodes, "nodes");
  require_path(rc.edges, "edges");
  const auto g = graph::load_graph(rc.nodes, rc.edges, rc.schema);
  const auto v = text::build_vocab(g, rc.vocab_max_size, rc.vocab_min_count);
  prepare_out(rc);
  v.save(out_path(rc, "vocab.txt"));
  out << "vocabulary of " << v.size() << " tokens written to " << out_path(rc, "vocab.txt") << '\n';
  return 0;
}

inline int cmd_warmup(RunConfig rc, std::ostream& out, const Log& log) {
  rc.train.warmup = true;
  const auto ws = load_workspace(rc);
  auto p = initial_params(*ws, rc);
  if (!rc.ckpt.empty()) load_params(rc.ckpt, *ws, p, log);
  std::vector<TraceRow> trace;
  prepare_textless(*ws, rc, p, trace, log);
  const auto c = train::Checkpoint::capture(p, ws->graph.schema(), ws->model_cfg);
  prepare_out(rc);
  ws->vocab.save(out_path(rc, "vocab.txt"));
  write_atomically(out_path(rc, "trace.csv"), trace_csv(trace));
  train::save_checkpoint(c, out_path(rc, "warmup.ckpt"));
  write_atomically(out_path(rc, "digest.txt"), hex_digest(train::checkpoint_digest(c)) + "\n");
  out << "warm-up checkpoint " << out_path(rc, "warmup.ckpt") << " digest " << hex_digest(train::checkpoint_digest(c))
      << '\n';
  return 0;
}

inline int cmd_train(const RunConfig& rc, std::ostream& out, const Log& log) {
  const auto ws = load_workspace(rc);
  auto p = initial_params(*ws, rc);
  const bool from_ckpt = !rc.ckpt.empty();
  if (from_ckpt) load_params(rc.ckpt, *ws, p, log);
  const auto r = train_model(*ws, rc, p, from_ckpt, log);
  MetricsReport m;
  add_link(m, "link", r.test);
  add_link(m, "link.dev", r.dev);
  m.add_text("train", "best_epoch", std::to_string(r.fit.best_epoch));
  m.add_text("train", "epochs", std::to_string(r.fit.trace.size()));
  m.add_text("train", "digest", hex_digest(r.digest));
  prepare_out(rc);
  ws->vocab.save(out_path(rc, "vocab.txt"));
  write_atomically(out_path(rc, "trace.csv"), trace_csv(r.trace));
  train::save_checkpoint(r.fit.best, out_path(rc, "model.ckpt"));
  write_atomically(out_path(rc, "digest.txt"), hex_digest(r.digest) + "\n");
  write_atomically(out_path(rc, "metrics.txt"), m.str());
  out << m.str();
  return 0;
}

inline int cmd_eval(const RunConfig& rc, bool probe, bool cluster, std::ostream& out, const Log& log) {
  require_path(rc.ckpt, "checkpoint (--ckpt)");
  const auto ws = load_workspace(rc);
  auto p = initial_params(*ws, rc);
  load_params(rc.ckpt, *ws, p, log);
  const auto enc = ws->encoder();
  const auto seed = train::eval_sample_seed(rc.seed);
  MetricsReport m;
  m.add_text("link", "ablation", model::to_string(ws->model_cfg.ablation));
  add_link(m, "link", eval::metrics(eval::evaluate_links(enc, p, ws->split.test, rc.train.test_batch_size, seed)));
  add_link(m, "link.dev", eval::metrics(eval::evaluate_links(enc, p, ws->split.dev, rc.train.test_batch_size, seed)));
  if (probe || cluster) {
    require_path(rc.labels, "labels");
    const auto labels = graph::load_labels(rc.labels);
    const auto emb = eval::embed_all(enc, p, seed);
    const auto text_rich = labeled_rows(emb, ws->graph, labels, true);
    if (probe) {
      auto pc = rc.probe;
      pc.seed = rc.seed;
      const auto r = run_probe(text_rich, pc, rc.split_seed, log);
      m.add("probe", "prec", r.prec);
      m.add("probe", "ndcg", r.ndcg);
      const auto textless = labeled_rows(emb, ws->graph, labels, false);
      if (textless.y.size() >= 3) {
        pc.lr = rc.probe_textless_lr;
        const auto t = run_probe(textless, pc, rc.split_seed, log);
        m.add("probe.textless", "prec", t.prec);
        m.add("probe.textless", "ndcg", t.ndcg);
      }
    }
    if (cluster) {
      const auto c = run_clustering(text_rich, rc.seed, rc.kmeans_restarts);
      m.add("cluster", "nmi", c.nmi);
      m.add("cluster", "ari", c.ari);
    }
  }
  prepare_out(rc);
  write_atomically(out_path(rc, "metrics.txt"), m.str());
  out << m.str();
  return 0;
}

inline int cmd_embed(const RunConfig& rc, std::ostream& out, const Log& log) {
  require_path(rc.ckpt, "checkpoint (--ckpt)");
  const auto ws = load_workspace(rc);
  auto p = initial_params(*ws, rc);
  load_params(rc.ckpt, *ws, p, log);
  const auto emb = eval::embed_all(ws->encoder(), p, train::eval_sample_seed(rc.seed));
  prepare_out(rc);
  const auto path = out_path(rc, "embeddings.tsv");
  eval::write_embeddings(emb, path + ".tmp");
  std::filesystem::rename(path + ".tmp", path);
  out << "wrote " << emb.ids.size() << " embeddings to " << path << '\n';
  return 0;
}

inline int cmd_retrieve(const RunConfig& rc, const std::string& query, std::size_t k, const std::string& embeddings,
                        std::ostream& out, const Log& log) {
  require_path(rc.ckpt, "checkpoint (--ckpt)");
  const auto ws = load_workspace(rc);
  auto p = initial_params(*ws, rc);
  load_params(rc.ckpt, *ws, p, log);
  const auto enc = ws->encoder();
  const auto corpus = embeddings.empty() ? eval::embed_all(enc, p, train::eval_sample_seed(rc.seed), true)
                                         : eval::read_embeddings(embeddings);
  const auto hits = eval::retrieve(query, corpus, enc, p, ws->vocab, k, log);
  std::string table = "rank\tid\tscore\n";
  char buf[64];
  for (std::size_t i = 0; i < hits.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", hits[i].score);
    table += std::to_string(i + 1) + '\t' + hits[i].id + '\t' + buf + '\n';
  }
  prepare_out(rc);
  write_atomically(out_path(rc, "retrieval.tsv"), table);
  out << table;
  return 0;
}

inline int cmd_benchmark(RunConfig rc, std::ostream& out) {
  rc.bench.seed = rc.seed;
  const auto rows = bench::run_benchmark(rc.bench);
  prepare_out(rc);
  const auto path = out_path(rc, "bench.csv");
  bench::write_csv(rows, path + ".tmp");
  std::filesystem::rename(path + ".tmp", path);
  out << "P\tM\tN\tnested_ms\tcascaded_ms\tconcat_ms\n";
  for (const auto& r : rows) {
    out << r.P << '\t' << r.M << '\t' << r.N << '\t' << r.nested_ms << '\t' << r.cascaded_ms << '\t' << r.concat_ms
        << '\n';
  }
  if (rc.bench.P.size() == 1 && rc.bench.M.size() == 1 && rows.size() >= 2) {
    std::vector<double> n, len, nested, concat;
    for (const auto& r : rows) {
      n.push_back(static_cast<double>(r.N));
      len.push_back(static_cast<double>(r.concat_length));
      nested.push_back(r.nested_ms);
      concat.push_back(r.concat_ms);
    }
    out << "nested slope vs N: " << bench::loglog_slope(n, nested) << '\n'
        << "concat slope vs sequence length: " << bench::loglog_slope(len, concat) << '\n'
        << "nested growth: " << rows.back().nested_ms / rows.front().nested_ms << "x\n"
        << "concat growth: " << rows.back().concat_ms / rows.front().concat_ms << "x\n";
  }
  out << "wrote " << path << '\n';
  return 0;
}

/// Entry point of the `heterformer` executable.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Heterformer: GNN-nested transformer for heterogeneous text-rich networks", "heterformer"};
  app.require_subcommand(1);
  std::map<std::string, ParsedFlags> flags;
  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    add_common(s, flags[name]);
    return s;
  };
  sub("generate", "write a synthetic network with planted topics");
  sub("vocab", "build the vocabulary file");
  sub("warmup", "train textless embeddings against the frozen text encoder");
  sub("train", "link-prediction training with early stopping");
  auto* eval_cmd = sub("eval", "link metrics on the test split, optional probe and clustering");
  bool probe = false, cluster = false;
  eval_cmd->add_flag("--probe", probe, "node classification with an MLP probe");
  eval_cmd->add_flag("--cluster", cluster, "k-means clustering with NMI and ARI");
  sub("embed", "export every node embedding");
  auto* retrieve_cmd = sub("retrieve", "rank text-rich nodes against a free-text query");
  std::string query, embeddings;
  std::size_t k = 10;
  retrieve_cmd->add_option("--query", query, "query text")->required();
  retrieve_cmd->add_option("-k", k, "number of results");
  retrieve_cmd->add_option("--embeddings", embeddings, "precomputed embeddings file");
  sub("benchmark", "time nested, cascaded and concatenation layers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const Log log = [&](const std::string& msg) { err << msg << '\n'; };
  try {
    const auto* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    const RunConfig rc = resolve(flags.at(name));
    if (name == "generate") return cmd_generate(rc, out);
    if (name == "vocab") return cmd_vocab(rc, out);
    if (name == "warmup") return cmd_warmup(rc, out, log);
    if (name == "train") return cmd_train(rc, out, log);
    if (name == "eval") return cmd_eval(rc, probe, cluster, out, log);
    if (name == "embed") return cmd_embed(rc, out, log);
    if (name == "retrieve") return cmd_retrieve(rc, query, k, embeddings, out, log);
    if (name == "benchmark") return cmd_benchmark(rc, out);
    err << "error: unknown command '" << name << "'\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace heterformer::cli
