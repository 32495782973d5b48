#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "heterformer/graph/hetero_graph.hpp"
#include "heterformer/numcore/random.hpp"

namespace heterformer::graph {

struct SplitFractions {
  double train = 0.7;
  double dev = 0.1;
  double test = 0.2;
};

struct EdgeSplit {
  std::vector<Edge> train;
  std::vector<Edge> dev;
  std::vector<Edge> test;
};

/// Seeded shuffle of the edges of one type cut into train/dev/test blocks
/// whose sizes round the exact fractions.
inline EdgeSplit split_edges(const HeteroGraph& g, std::size_t edge_type, const SplitFractions& f,
                             std::uint64_t seed) {
  for (double v : {f.train, f.dev, f.test}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("split fraction " + std::to_string(v) + " outside [0, 1]");
  }
  if (std::abs(f.train + f.dev + f.test - 1.0) > 1e-9) throw ContractError("split fractions must sum to 1");
  auto edges = g.edges_of_type(edge_type);
  numcore::Rng rng(numcore::derive_seed(seed, {0x5b117ULL, edge_type}));
  std::shuffle(edges.begin(), edges.end(), rng);
  const auto n = static_cast<double>(edges.size());
  const auto n_train = static_cast<std::size_t>(std::llround(f.train * n));
  const auto n_train_dev = std::min(edges.size(), static_cast<std::size_t>(std::llround((f.train + f.dev) * n)));
  EdgeSplit split;
  split.train.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.dev.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train),
                   edges.begin() + static_cast<std::ptrdiff_t>(n_train_dev));
  split.test.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train_dev), edges.end());
  return split;
}

inline EdgeSplit split_edges(const HeteroGraph& g, const std::string& edge_type, const SplitFractions& f,
                             std::uint64_t seed) {
  return split_edges(g, g.schema().edge_type_index(edge_type), f, seed);
}

}  // namespace heterformer::graph
