#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "heterformer/model/encoder.hpp"

namespace heterformer::eval {

struct NodeEmbeddings {
  std::vector<std::string> ids;
  Tensor matrix;  // [n x d]
};

struct Hit {
  std::string id;
  double score = 0.0;
};

/// Top-k rows of `corpus` by inner product with `query`, ties broken by id.
/// k larger than the corpus is clamped (with a warning).
inline std::vector<Hit> top_k(const Tensor& query, const NodeEmbeddings& corpus, std::size_t k,
                              const std::function<void(const std::string&)>& warn = {}) {
  if (k == 0) return {};
  const auto n = corpus.ids.size();
  if (k > n) {
    if (warn) warn("warning: k=" + std::to_string(k) + " exceeds the corpus of " + std::to_string(n) + "; clamped");
    k = n;
  }
  if (corpus.matrix.cols() != query.size()) throw DimensionError("retrieve: query width differs from corpus width");
  std::vector<Hit> hits(n);
  const auto d = query.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += query[j] * corpus.matrix.at(i, j);
    hits[i] = {corpus.ids[i], s};
  }
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(),
                    [](const Hit& a, const Hit& b) { return a.score != b.score ? a.score > b.score : a.id < b.id; });
  hits.resize(k);
  return hits;
}

/// Encodes the query text alone and ranks the stored embeddings.
inline std::vector<Hit> retrieve(const std::string& query_text, const NodeEmbeddings& corpus, const model::Encoder& enc,
                                 const model::ModelParams& p, const text::Vocabulary& vocab, std::size_t k,
                                 const std::function<void(const std::string&)>& warn = {}) {
  numcore::NoTapeScope no_tape;
  const auto seq = text::encode_text(query_text, vocab, enc.config().seq_len);
  return top_k(enc.encode_sequence(seq, p), corpus, k, warn);
}

/// Text-rich nodes through the encoder (neighbors sampled with `seed`),
/// textless nodes through their layer-1 projection.
inline NodeEmbeddings embed_all(const model::Encoder& enc, const model::ModelParams& p, std::uint64_t seed,
                                bool text_rich_only = false) {
  numcore::NoTapeScope no_tape;
  const auto& g = enc.graph();
  NodeEmbeddings out;
  std::vector<Tensor> rows;
  model::StateCache cache;
  for (graph::NodeIndex n = 0; n < g.num_nodes(); ++n) {
    if (g.is_text_rich(n)) {
      const auto sample = graph::sample_neighbors(g, n, enc.config().budgets, seed);
      rows.push_back(enc.encode_center(sample, p, &cache));
    } else if (!text_rich_only) {
      rows.push_back(enc.textless_embedding(n, p));
    } else {
      continue;
    }
    out.ids.push_back(g.node(n).id);
  }
  if (!rows.empty()) out.matrix = numcore::concat_rows(rows);
  return out;
}

inline void write_embeddings(const NodeEmbeddings& e, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write embeddings file '" + path + "'");
  const auto d = e.ids.empty() ? 0 : e.matrix.cols();
  out << e.ids.size() << ' ' << d << '\n';
  char buf[32];
  for (std::size_t i = 0; i < e.ids.size(); ++i) {
    out << e.ids[i] << '\t';
    for (std::size_t j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.matrix.at(i, j));
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("short write to embeddings file '" + path + "'");
}

inline NodeEmbeddings read_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embeddings file '" + path + "'");
  std::size_t n = 0, d = 0;
  std::string line;
  if (!std::getline(in, line) || !(std::istringstream(line) >> n >> d)) {
    throw IoError(path + ":1: expected header 'n d'");
  }
  NodeEmbeddings e;
  std::vector<double> values;
  values.reserve(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw IoError(path + ": expected " + std::to_string(n) + " rows");
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw IoError(path + ":" + std::to_string(i + 2) + ": missing tab after id");
    e.ids.push_back(line.substr(0, tab));
    std::istringstream vs(line.substr(tab + 1));
    for (std::size_t j = 0; j < d; ++j) {
      double v;
      if (!(vs >> v)) throw IoError(path + ":" + std::to_string(i + 2) + ": expected " + std::to_string(d) + " values");
      values.push_back(v);
    }
  }
  if (n > 0 && d > 0) e.matrix = Tensor({n, d}, std::move(values));
  return e;
}

}  // namespace heterformer::eval
