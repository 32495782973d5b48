#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "heterformer/model/encoder.hpp"

namespace heterformer::bench {

using numcore::Tensor;

struct BenchConfig {
  std::size_t dim = 16;
  std::size_t heads = 2;
  std::size_t textless_dim = 16;
  std::vector<std::size_t> P = {32};
  std::vector<std::size_t> M = {5};
  std::vector<std::size_t> N = {16, 32, 64, 128, 256};
  std::size_t repetitions = 7;
  std::uint64_t seed = 3;
};

struct BenchRow {
  std::size_t P = 0, M = 0, N = 0;
  std::size_t concat_length = 0;  // P(M+1) + N
  double nested_ms = 0.0;
  double cascaded_ms = 0.0;
  double concat_ms = 0.0;
};

/// A star graph around one text-rich center with M text-rich and N textless
/// neighbors, every text exactly P tokens long (with [CLS]).
struct BenchInstance {
  graph::HeteroGraph g;
  text::Vocabulary vocab;
  model::HeterformerConfig cfg;
  model::TokenizedCorpus corpus;
  model::ModelParams params;
  graph::NeighborSample sample;

  static BenchInstance make(const BenchConfig& bc, std::size_t P, std::size_t M, std::size_t N) {
    graph::NodeTypeSchema s;
    s.add_node_type("doc", true);
    s.add_node_type("tag", false);
    s.add_edge_type("link", "doc", "doc");
    s.add_edge_type("has", "tag", "doc");
    BenchInstance b{graph::HeteroGraph(s), {}, {}, {}, {}, {}};
    numcore::Rng rng(numcore::derive_seed(bc.seed, {P, M, N}));
    std::uniform_int_distribution<std::size_t> pick(0, 199);
    auto doc = [&] {
      std::string t;
      for (std::size_t i = 0; i + 1 < P; ++i) t += "w" + std::to_string(pick(rng)) + ' ';
      return t;
    };
    for (std::size_t i = 0; i <= M; ++i) b.g.add_node("d" + std::to_string(i), 0, doc());
    for (std::size_t i = 0; i < N; ++i) b.g.add_node("t" + std::to_string(i), 1, std::nullopt);
    for (std::size_t i = 1; i <= M; ++i) b.g.add_edge(0, i, 0);
    for (std::size_t i = 0; i < N; ++i) b.g.add_edge(M + 1 + i, 0, 1);
    for (std::size_t i = 0; i < 200; ++i) b.vocab.add("w" + std::to_string(i));
    b.cfg.dim = bc.dim;
    b.cfg.heads = bc.heads;
    b.cfg.layers = 1;
    b.cfg.seq_len = P;
    b.cfg.textless_dim = bc.textless_dim;
    b.cfg.budgets = graph::Budgets::parse("link=" + std::to_string(M) + ",has=" + std::to_string(N), s);
    b.corpus = model::TokenizedCorpus::build(b.g, b.vocab, P);
    b.params = model::ModelParams::initialize(b.cfg, b.g, b.vocab.size(), bc.seed);
    b.sample = graph::sample_neighbors(b.g, 0, b.cfg.budgets, bc.seed);
    return b;
  }
};

template <class Fn>
double min_time_ms(std::size_t reps, Fn&& fn) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(reps, 1); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

/// Layer-1 work of the three designs on one center, given layer-1 states:
/// nested (aggregation + joint layer + neighbor updates), cascaded (plain
/// layer on center and neighbors), and one plain layer over the
/// concatenation of all token states and textless embeddings.
inline BenchRow measure(const BenchConfig& bc, std::size_t P, std::size_t M, std::size_t N) {
  numcore::NoTapeScope no_tape;
  auto b = BenchInstance::make(bc, P, M, N);
  const model::Encoder enc(b.cfg, b.g, b.corpus);
  const auto& p = b.params;
  const auto& lp = p.layers[1];
  std::vector<Tensor> states;  // center first, then text-rich neighbors
  std::vector<numcore::Mask> masks;
  for (std::size_t i = 0; i <= M; ++i) {
    states.push_back(enc.plain_states(i, 1, p, nullptr));
    masks.push_back(enc.token_mask(i));
  }
  BenchRow row{P, M, N, P * (M + 1) + N, 0.0, 0.0, 0.0};
  volatile double sink = 0.0;

  row.nested_ms = min_time_ms(bc.repetitions, [&] {
    const Tensor h_x = numcore::row(states[0], 0);
    std::vector<model::NeighborState> tr_states;
    for (std::size_t i = 1; i <= M; ++i) tr_states.push_back({numcore::row(states[i], 0), 0, true});
    const Tensor tr_row = model::aggregate_text_rich(h_x, tr_states, lp, p, b.cfg.heads).output;
    const Tensor tl_row =
        model::aggregate_textless(h_x, model::textless_states(b.g, b.sample.textless, 1, p), lp, p, b.cfg.heads).output;
    const Tensor out = model::joint_encode_layer(states[0], model::dispatch(tr_row, states[0], tl_row), masks[0], lp,
                                                 b.cfg.heads, b.cfg.layer_norm_eps);
    double acc = out[0];
    for (std::size_t i = 1; i <= M; ++i) {
      acc += model::plain_transformer_layer(states[i], masks[i], lp, b.cfg.heads, b.cfg.layer_norm_eps)[0];
    }
    sink = sink + acc;
  });

  row.cascaded_ms = min_time_ms(bc.repetitions, [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i <= M; ++i) {
      acc += model::plain_transformer_layer(states[i], masks[i], lp, b.cfg.heads, b.cfg.layer_norm_eps)[0];
    }
    sink = sink + acc;
  });

  row.concat_ms = min_time_ms(bc.repetitions, [&] {
    std::vector<Tensor> parts(states.begin(), states.end());
    for (const auto& s : model::textless_states(b.g, b.sample.textless, 1, p)) {
      if (s.valid) parts.push_back(s.state);
    }
    const Tensor seq = numcore::concat_rows(parts);
    const numcore::Mask mask(seq.rows(), 1);
    sink = sink + model::plain_transformer_layer(seq, mask, lp, b.cfg.heads, b.cfg.layer_norm_eps)[0];
  });
  return row;
}

inline std::vector<BenchRow> run_benchmark(const BenchConfig& bc) {
  std::vector<BenchRow> rows;
  for (auto P : bc.P)
    for (auto M : bc.M)
      for (auto N : bc.N) rows.push_back(measure(bc, P, M, N));
  return rows;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("loglog_slope: need at least two paired points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

inline void write_csv(const std::vector<BenchRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write benchmark file '" + path + "'");
  out << "P,M,N,concat_length,nested_ms,cascaded_ms,concat_ms\n";
  out.precision(6);
  for (const auto& r : rows) {
    out << r.P << ',' << r.M << ',' << r.N << ',' << r.concat_length << ',' << std::fixed << r.nested_ms << ','
        << r.cascaded_ms << ',' << r.concat_ms << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

}  // namespace heterformer::bench
