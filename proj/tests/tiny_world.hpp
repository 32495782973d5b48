#pragma once

#include <memory>
#include <string>
#include <vector>

#include "heterformer/model/encoder.hpp"
#include "heterformer/text/vocabulary.hpp"

namespace heterformer::testing {

/// Small hand-built network: six papers, three authors, two venues.
inline graph::HeteroGraph tiny_graph() {
  graph::NodeTypeSchema s;
  s.add_node_type("paper", true);
  s.add_node_type("author", false);
  s.add_node_type("venue", false);
  s.add_edge_type("cites", "paper", "paper");
  s.add_edge_type("writes", "author", "paper");
  s.add_edge_type("published_in", "venue", "paper");
  graph::HeteroGraph g(s);
  const std::vector<std::string> texts = {
      "graph neural networks",       "text mining with graphs", "language models",
      "neural text encoders rock",   "graphs",                  "unrelated music theory",
  };
  for (std::size_t i = 0; i < texts.size(); ++i) g.add_node("p" + std::to_string(i), "paper", texts[i]);
  for (int i = 0; i < 3; ++i) g.add_node("a" + std::to_string(i), "author", std::nullopt);
  for (int i = 0; i < 2; ++i) g.add_node("v" + std::to_string(i), "venue", std::nullopt);
  for (auto [a, b] : std::vector<std::pair<const char*, const char*>>{
           {"p0", "p1"}, {"p0", "p2"}, {"p0", "p3"}, {"p1", "p3"}, {"p2", "p4"}, {"p3", "p4"}}) {
    g.add_edge(a, b, "cites");
  }
  for (auto [a, b] : std::vector<std::pair<const char*, const char*>>{
           {"a0", "p0"}, {"a0", "p1"}, {"a1", "p0"}, {"a1", "p3"}, {"a2", "p2"}, {"a2", "p5"}}) {
    g.add_edge(a, b, "writes");
  }
  for (auto [a, b] : std::vector<std::pair<const char*, const char*>>{
           {"v0", "p0"}, {"v0", "p2"}, {"v1", "p1"}, {"v1", "p3"}, {"v1", "p5"}}) {
    g.add_edge(a, b, "published_in");
  }
  return g;
}

/// Same schema with cites edges forming a perfect matching p0-p1, p2-p3,
/// p4-p5.
inline graph::HeteroGraph matching_graph() {
  auto full = tiny_graph();
  graph::HeteroGraph g(full.schema());
  for (const auto& n : full.nodes()) g.add_node(n.id, n.type, n.text);
  const auto cites = full.schema().edge_type_index("cites");
  for (const auto& e : full.edges())
    if (e.type != cites) g.add_edge(e.src, e.dst, e.type);
  for (auto [a, b] : std::vector<std::pair<const char*, const char*>>{{"p0", "p1"}, {"p2", "p3"}, {"p4", "p5"}}) {
    g.add_edge(a, b, "cites");
  }
  return g;
}

/// Graph, vocabulary, corpus and parameters for a d=8, k=2, L=2, s=4 model
/// with two text-rich and two textless neighbor slots.
struct TinyWorld {
  graph::HeteroGraph graph;
  text::Vocabulary vocab;
  model::HeterformerConfig cfg;
  model::TokenizedCorpus corpus;
  model::ModelParams params;

  explicit TinyWorld(std::uint64_t seed = 1, double init_std = 0.3, bool trim = true)
      : TinyWorld(tiny_graph(), seed, init_std, trim) {}
  TinyWorld(graph::HeteroGraph g, std::uint64_t seed, double init_std = 0.3, bool trim = true)
      : graph(std::move(g)), vocab(text::build_vocab(graph, 100, 1)) {
    cfg.dim = 8;
    cfg.heads = 2;
    cfg.layers = 2;
    cfg.seq_len = 4;
    cfg.textless_dim = 4;
    cfg.init_std = init_std;
    cfg.trim_padding = trim;
    cfg.budgets = graph::Budgets::parse("cites=2,writes=1,published_in=1", graph.schema());
    corpus = model::TokenizedCorpus::build(graph, vocab, cfg.seq_len);
    params = model::ModelParams::initialize(cfg, graph, vocab.size(), seed);
  }
  TinyWorld(const TinyWorld&) = delete;
  TinyWorld& operator=(const TinyWorld&) = delete;

  model::Encoder encoder() const { return model::Encoder(cfg, graph, corpus); }
  graph::NeighborSample sample(const std::string& id, std::uint64_t seed = 3) const {
    return graph::sample_neighbors(graph, id, cfg.budgets, seed);
  }
};

}  // namespace heterformer::testing
