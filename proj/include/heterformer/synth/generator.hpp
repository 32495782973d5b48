#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "heterformer/graph/hetero_graph.hpp"
#include "heterformer/graph/io.hpp"
#include "heterformer/numcore/random.hpp"

namespace heterformer::synth {

struct TypeCount {
  std::string name;
  std::size_t count = 0;
  std::size_t degree = 0;  // textless only: attachments per node
  std::string edge_name;   // textless only: edge type joining it to the text-rich type
};

struct SynthConfig {
  std::size_t topics = 4;
  std::string text_rich_type = "paper";
  std::size_t text_rich_count = 2000;
  std::string link_edge_type = "cites";
  std::vector<TypeCount> textless = {
      {"author", 200, 30, "writes"},
      {"venue", 200, 30, "published_in"},
      {"term", 200, 30, "mentions"},
  };
  std::size_t vocab_size = 500;
  std::size_t words_per_doc = 20;
  double concentration = 0.1;    // symmetric Dirichlet parameter of topic-word distributions
  double background = 0.5;       // share of words drawn uniformly from the whole vocabulary
  double p_in = 0.01;
  double p_out = 0.001;
  double beta = 0.9;             // probability a textless attachment stays within topic
  double locality = 0.9;         // within-topic attachments that follow a link of an earlier attachment
  std::uint64_t seed = 1;

  /// p_in = p_out together with beta = 1/T is the no-signal limit and is
  /// accepted.
  void validate() const {
    if (topics < 2) throw ContractError("synth: need at least 2 topics");
    if (text_rich_count < topics) throw ContractError("synth: fewer text-rich nodes than topics");
    if (vocab_size < 1 || words_per_doc < 1) throw ContractError("synth: vocabulary and document length must be positive");
    if (!(concentration > 0.0)) throw ContractError("synth: topic-word concentration must be positive");
    if (!(background >= 0.0 && background <= 1.0)) throw ContractError("synth: background share outside [0, 1]");
    if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
      throw ContractError("synth: edge probabilities outside [0, 1]");
    }
    if (p_in < p_out) throw ContractError("synth: p_in must not be below p_out");
    if (!(beta >= 1.0 / static_cast<double>(topics) - 1e-12 && beta <= 1.0)) {
      throw ContractError("synth: beta must lie in [1/T, 1]");
    }
    if (!(locality >= 0.0 && locality <= 1.0)) throw ContractError("synth: locality outside [0, 1]");
    for (const auto& t : textless) {
      if (t.name.empty() || t.edge_name.empty()) throw ContractError("synth: textless type needs a name and edge name");
    }
  }

  graph::NodeTypeSchema schema() const {
    graph::NodeTypeSchema s;
    s.add_node_type(text_rich_type, true);
    for (const auto& t : textless) s.add_node_type(t.name, false);
    s.add_edge_type(link_edge_type, text_rich_type, text_rich_type);
    for (const auto& t : textless) s.add_edge_type(t.edge_name, t.name, text_rich_type);
    s.validate();
    return s;
  }
};

struct GeneratedNetwork {
  graph::HeteroGraph graph;
  std::vector<std::size_t> topic;  // per node index
};

inline std::string word(std::size_t i) { return "w" + std::to_string(i); }

/// Planted-topic heterogeneous network. Deterministic given the config.
inline GeneratedNetwork generate(const SynthConfig& cfg) {
  cfg.validate();
  numcore::Rng rng(numcore::derive_seed(cfg.seed, {0x5e7ULL}));
  const auto T = cfg.topics;
  const auto V = cfg.vocab_size;

  std::vector<std::discrete_distribution<std::size_t>> topic_words;
  for (std::size_t t = 0; t < T; ++t) {
    std::gamma_distribution<double> gamma(cfg.concentration, 1.0);
    std::vector<double> w(V);
    double total = 0.0;
    for (auto& v : w) total += (v = gamma(rng));
    if (total <= 0.0) w.assign(V, 1.0);
    topic_words.emplace_back(w.begin(), w.end());
  }
  std::uniform_int_distribution<std::size_t> any_word(0, V - 1);
  std::bernoulli_distribution from_background(cfg.background);

  auto balanced_topics = [&](std::size_t n) {
    std::vector<std::size_t> topics(n);
    for (std::size_t i = 0; i < n; ++i) topics[i] = i % T;
    std::shuffle(topics.begin(), topics.end(), rng);
    return topics;
  };

  GeneratedNetwork net{graph::HeteroGraph(cfg.schema()), {}};
  auto& g = net.graph;
  const auto paper_topics = balanced_topics(cfg.text_rich_count);
  std::vector<std::vector<graph::NodeIndex>> by_topic(T);
  for (std::size_t i = 0; i < cfg.text_rich_count; ++i) {
    std::string doc;
    for (std::size_t w = 0; w < cfg.words_per_doc; ++w) {
      if (w) doc += ' ';
      doc += word(from_background(rng) ? any_word(rng) : topic_words[paper_topics[i]](rng));
    }
    const auto n = g.add_node(cfg.text_rich_type.substr(0, 1) + std::to_string(i), 0, doc);
    net.topic.push_back(paper_topics[i]);
    by_topic[paper_topics[i]].push_back(n);
  }

  // Planted partition over text-rich pairs.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < cfg.text_rich_count; ++i) {
    for (std::size_t j = i + 1; j < cfg.text_rich_count; ++j) {
      const double p = paper_topics[i] == paper_topics[j] ? cfg.p_in : cfg.p_out;
      if (unit(rng) < p) g.add_edge(i, j, 0);
    }
  }

  for (std::size_t k = 0; k < cfg.textless.size(); ++k) {
    const auto& tc = cfg.textless[k];
    const std::size_t node_type = k + 1;
    const std::size_t edge_type = k + 1;
    const auto topics = balanced_topics(tc.count);
    std::string prefix = tc.name.substr(0, 1);
    for (std::size_t i = 0; i < tc.count; ++i) {
      const auto v = g.add_node(prefix + std::to_string(i), node_type, std::nullopt);
      net.topic.push_back(topics[i]);
      std::vector<graph::NodeIndex> attached;
      std::size_t attempts = 0;
      while (attached.size() < tc.degree && attempts < 20 * tc.degree + 20) {
        ++attempts;
        graph::NodeIndex target;
        if (unit(rng) < cfg.beta) {
          const auto& pool = by_topic[topics[i]];
          target = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
          if (!attached.empty() && unit(rng) < cfg.locality) {
            const auto anchor = attached[std::uniform_int_distribution<std::size_t>(0, attached.size() - 1)(rng)];
            const auto links = g.neighbors(anchor, 0);
            std::vector<graph::NodeIndex> same;
            for (auto u : links)
              if (paper_topics[u] == topics[i]) same.push_back(u);
            if (!same.empty()) target = same[std::uniform_int_distribution<std::size_t>(0, same.size() - 1)(rng)];
          }
        } else {
          std::size_t other = std::uniform_int_distribution<std::size_t>(0, T - 2)(rng);
          if (other >= topics[i]) ++other;
          const auto& pool = by_topic[other];
          target = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
        }
        if (g.add_edge(v, target, edge_type)) attached.push_back(target);
      }
    }
  }
  return net;
}

struct NetworkFiles {
  std::string schema, nodes, edges, labels;

  static NetworkFiles in(const std::string& dir) {
    const std::filesystem::path d(dir);
    return {(d / "schema.txt").string(), (d / "nodes.tsv").string(), (d / "edges.tsv").string(),
            (d / "labels.tsv").string()};
  }
};

inline void write_labels(const GeneratedNetwork& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write labels file '" + path + "'");
  for (graph::NodeIndex n = 0; n < net.graph.num_nodes(); ++n) out << net.graph.node(n).id << '\t' << net.topic[n] << '\n';
}

inline NetworkFiles write_network(const GeneratedNetwork& net, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto files = NetworkFiles::in(dir);
  net.graph.schema().save(files.schema);
  graph::write_graph(net.graph, files.nodes, files.edges);
  write_labels(net, files.labels);
  return files;
}

}  // namespace heterformer::synth
