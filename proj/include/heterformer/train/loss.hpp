#pragma once

#include <numeric>
#include <vector>

#include "heterformer/numcore/ops.hpp"

namespace heterformer::train {

using numcore::Tensor;

/// In-batch contrastive loss: row i of `keys` is the positive for row i of
/// `queries`, every other row is a negative.
inline Tensor link_loss(const Tensor& queries, const Tensor& keys) {
  if (queries.rank() != 2 || keys.rank() != 2 || queries.shape() != keys.shape()) {
    throw DimensionError("link_loss: query/key shapes " + numcore::shape_string(queries.shape()) + " and " +
                         numcore::shape_string(keys.shape()) + " must be equal matrices");
  }
  const auto b = queries.rows();
  if (b < 2) throw ContractError("link_loss: batch of " + std::to_string(b) + " has no in-batch negatives");
  std::vector<std::size_t> targets(b);
  std::iota(targets.begin(), targets.end(), std::size_t{0});
  return numcore::cross_entropy(numcore::matmul_bt(queries, keys), targets);
}

/// Warm-up loss: projected textless embeddings against frozen text-side
/// embeddings. The keys never receive gradient.
inline Tensor warmup_loss(const Tensor& textless_embs, const Tensor& frozen_text_embs) {
  return link_loss(textless_embs, frozen_text_embs.detach());
}

}  // namespace heterformer::train
