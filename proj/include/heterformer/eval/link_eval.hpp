#pragma once

#include <vector>

#include "heterformer/eval/ranking.hpp"
#include "heterformer/graph/split.hpp"
#include "heterformer/model/encoder.hpp"

namespace heterformer::eval {

/// Embeddings of text-rich centers, one row per entry of `nodes`. Neighbors
/// are sampled with `sample_seed`; plain-layer states are shared through
/// `cache` when given.
inline Tensor encode_batch(const model::Encoder& enc, const model::ModelParams& p,
                           const std::vector<graph::NodeIndex>& nodes, std::uint64_t sample_seed,
                           model::StateCache* cache = nullptr) {
  std::vector<Tensor> rows;
  rows.reserve(nodes.size());
  for (auto n : nodes) {
    const auto sample = graph::sample_neighbors(enc.graph(), n, enc.config().budgets, sample_seed);
    rows.push_back(enc.encode_center(sample, p, cache));
  }
  return numcore::concat_rows(rows);
}

/// In-batch ranking over consecutive chunks of `edges` (src as query, dst as
/// key). A trailing chunk with fewer than two edges is dropped.
inline RankingResult evaluate_links(const model::Encoder& enc, const model::ModelParams& p,
                                    const std::vector<graph::Edge>& edges, std::size_t batch_size,
                                    std::uint64_t sample_seed) {
  if (batch_size < 2) throw ContractError("evaluate_links: test batch size must be at least 2");
  numcore::NoTapeScope no_tape;
  RankingResult all;
  for (std::size_t start = 0; start + 1 < edges.size(); start += batch_size) {
    const auto end = std::min(edges.size(), start + batch_size);
    std::vector<graph::NodeIndex> q, k;
    for (std::size_t i = start; i < end; ++i) {
      q.push_back(edges[i].src);
      k.push_back(edges[i].dst);
    }
    model::StateCache cache;
    const Tensor qe = encode_batch(enc, p, q, sample_seed, &cache);
    const Tensor ke = encode_batch(enc, p, k, sample_seed, &cache);
    all.append(rank_in_batch(qe, ke));
  }
  return all;
}

}  // namespace heterformer::eval
