#pragma once

#include <cmath>
#include <vector>

#include "heterformer/model/params.hpp"
#include "heterformer/numcore/ops.hpp"

namespace heterformer::model {

using numcore::Mask;

/// Multi-head attention with queries projected from `query_input` and
/// keys/values projected from `kv_input`. Heads are contiguous column chunks
/// of width d/k; `key_mask` has one entry per key row.
inline Tensor multi_head_attention(const Tensor& query_input, const Tensor& kv_input, const Mask& key_mask,
                                   const Tensor& wq, const Tensor& wk, const Tensor& wv, std::size_t heads) {
  using namespace numcore;
  const auto d = wq.rows();
  if (key_mask.size() != kv_input.rows()) {
    throw DimensionError("attention: key mask of length " + std::to_string(key_mask.size()) + " for " +
                         std::to_string(kv_input.rows()) + " key rows");
  }
  const auto dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Tensor q = linear(query_input, wq);
  const Tensor k = linear(kv_input, wk);
  const Tensor v = linear(kv_input, wv);
  std::vector<Tensor> outputs;
  outputs.reserve(heads);
  for (std::size_t i = 0; i < heads; ++i) {
    const Tensor qi = heads == 1 ? q : slice_cols(q, i * dh, dh);
    const Tensor ki = heads == 1 ? k : slice_cols(k, i * dh, dh);
    const Tensor vi = heads == 1 ? v : slice_cols(v, i * dh, dh);
    const Tensor weights = masked_softmax(scale(matmul_bt(qi, ki), inv_sqrt), key_mask);
    outputs.push_back(weights.rank() == 1 ? matmul_bt(weights, transpose(vi)) : matmul(weights, vi));
  }
  return heads == 1 ? outputs.front() : concat_cols(outputs);
}

/// MLP(x) = W2 gelu(W1 x + b1) + b2, row-wise.
inline Tensor feed_forward(const Tensor& x, const LayerParams& p) {
  return numcore::linear(numcore::gelu(numcore::linear(x, p.ffn_w1, p.ffn_b1)), p.ffn_w2, p.ffn_b2);
}

/// Residual + norm around attention, then residual + norm around the MLP.
inline Tensor residual_blocks(const Tensor& h, const Tensor& attention, const LayerParams& p, double eps) {
  using namespace numcore;
  const Tensor h1 = layer_norm(add(h, attention), p.ln1_gamma, p.ln1_beta, eps);
  return layer_norm(add(h1, feed_forward(h1, p)), p.ln2_gamma, p.ln2_beta, eps);
}

/// Asymmetric layer: queries from the s token states H, keys and values from
/// the s + 2 rows of the augmented sequence (aggregation, tokens,
/// aggregation). Padded token columns are masked; an aggregation row is
/// masked only when its flag is off.
inline Tensor joint_encode_layer(const Tensor& tokens, const Tensor& augmented, const Mask& token_mask,
                                 const LayerParams& p, std::size_t heads, double eps = numcore::kLayerNormEps,
                                 bool keep_text_rich_row = true, bool keep_textless_row = true) {
  if (augmented.rows() != tokens.rows() + 2 || augmented.cols() != tokens.cols()) {
    throw DimensionError("joint_encode_layer: augmented sequence " + numcore::shape_string(augmented.shape()) +
                         " does not wrap token states " + numcore::shape_string(tokens.shape()));
  }
  if (token_mask.size() != tokens.rows()) throw DimensionError("joint_encode_layer: token mask length mismatch");
  Mask key_mask;
  key_mask.reserve(token_mask.size() + 2);
  key_mask.push_back(keep_text_rich_row ? 1 : 0);
  key_mask.insert(key_mask.end(), token_mask.begin(), token_mask.end());
  key_mask.push_back(keep_textless_row ? 1 : 0);
  const Tensor attention = multi_head_attention(tokens, augmented, key_mask, p.wq, p.wk, p.wv, heads);
  return residual_blocks(tokens, attention, p, eps);
}

/// Standard symmetric transformer layer.
inline Tensor plain_transformer_layer(const Tensor& tokens, const Mask& token_mask, const LayerParams& p,
                                      std::size_t heads, double eps = numcore::kLayerNormEps) {
  if (token_mask.size() != tokens.rows()) throw DimensionError("plain_transformer_layer: token mask length mismatch");
  const Tensor attention = multi_head_attention(tokens, tokens, token_mask, p.wq, p.wk, p.wv, heads);
  return residual_blocks(tokens, attention, p, eps);
}

/// Augmented sequence: text-rich aggregation row, token rows, textless
/// aggregation row. No position embedding is added to the extra rows.
inline Tensor dispatch(const Tensor& text_rich_agg, const Tensor& tokens, const Tensor& textless_agg) {
  if (text_rich_agg.size() != tokens.cols() || textless_agg.size() != tokens.cols()) {
    throw DimensionError("dispatch: aggregation vectors must match the token width");
  }
  return numcore::concat_rows({text_rich_agg, tokens, textless_agg});
}

}  // namespace heterformer::model
