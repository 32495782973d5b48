#pragma once

#include <cmath>
#include <vector>

#include "heterformer/numcore/ops.hpp"

namespace heterformer::eval {

using numcore::Tensor;

struct RankingResult {
  std::vector<std::size_t> ranks;  // 1-based rank of the true key per query
  std::size_t candidates = 0;

  void append(const RankingResult& other) {
    ranks.insert(ranks.end(), other.ranks.begin(), other.ranks.end());
    candidates = std::max(candidates, other.candidates);
  }
};

struct LinkMetrics {
  double prec = 0.0;
  double mrr = 0.0;
  double ndcg = 0.0;
};

/// Rank of key i among all keys by descending q_i . k score. Ties count
/// against the true key.
inline RankingResult rank_in_batch(const Tensor& queries, const Tensor& keys) {
  if (queries.rank() != 2 || keys.rank() != 2 || queries.shape() != keys.shape()) {
    throw DimensionError("rank_in_batch: query/key shapes " + numcore::shape_string(queries.shape()) + " and " +
                         numcore::shape_string(keys.shape()) + " must be equal matrices");
  }
  const auto c = queries.rows();
  if (c < 2) throw ContractError("rank_in_batch: need at least 2 candidates, got " + std::to_string(c));
  numcore::NoTapeScope no_tape;
  const Tensor scores = numcore::matmul_bt(queries, keys);
  RankingResult r;
  r.candidates = c;
  r.ranks.reserve(c);
  for (std::size_t i = 0; i < c; ++i) {
    const double truth = scores.at(i, i);
    std::size_t rank = 1;
    for (std::size_t j = 0; j < c; ++j) {
      if (j != i && scores.at(i, j) >= truth) ++rank;
    }
    r.ranks.push_back(rank);
  }
  return r;
}

inline double reciprocal_rank(std::size_t rank) { return 1.0 / static_cast<double>(rank); }

/// Single relevant item, so the ideal DCG is 1.
inline double ndcg_at_rank(std::size_t rank) { return 1.0 / std::log2(1.0 + static_cast<double>(rank)); }

inline LinkMetrics metrics(const RankingResult& r) {
  LinkMetrics m;
  if (r.ranks.empty()) return m;
  for (auto rank : r.ranks) {
    if (rank < 1) throw ContractError("metrics: ranks are 1-based");
    m.prec += rank == 1 ? 1.0 : 0.0;
    m.mrr += reciprocal_rank(rank);
    m.ndcg += ndcg_at_rank(rank);
  }
  const auto n = static_cast<double>(r.ranks.size());
  m.prec /= n;
  m.mrr /= n;
  m.ndcg /= n;
  return m;
}

}  // namespace heterformer::eval
