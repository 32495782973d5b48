#pragma once

#include <cmath>
#include <vector>

#include "heterformer/graph/hetero_graph.hpp"
#include "heterformer/model/params.hpp"
#include "heterformer/numcore/ops.hpp"

namespace heterformer::model {

/// One neighbor slot for aggregation: its layer-l state and edge type.
/// Invalid slots are padding and get zero attention.
struct NeighborState {
  Tensor state;  // [d]; may be undefined for padding
  std::size_t edge_type = 0;
  bool valid = false;
};

struct AggregationResult {
  Tensor output;                              // [d]
  std::vector<Tensor> weights;                // per head, [1 + slots]; index 0 is the self slot
};

/// h_{t->x} = W_r h_t, applied once per run of consecutive same-type slots.
inline std::vector<Tensor> propagate(const std::vector<NeighborState>& neighbors, const std::vector<Tensor>& relation,
                                     std::size_t d) {
  using namespace numcore;
  std::vector<Tensor> rows(neighbors.size());
  std::size_t i = 0;
  while (i < neighbors.size()) {
    if (!neighbors[i].valid) {
      rows[i] = Tensor::zeros({d});
      ++i;
      continue;
    }
    std::size_t j = i;
    std::vector<Tensor> run;
    while (j < neighbors.size() && neighbors[j].valid && neighbors[j].edge_type == neighbors[i].edge_type) {
      if (neighbors[j].state.size() != d) throw DimensionError("aggregation: neighbor state width mismatch");
      run.push_back(neighbors[j].state);
      ++j;
    }
    if (neighbors[i].edge_type >= relation.size()) {
      throw ContractError("aggregation: no relation matrix for edge type " + std::to_string(neighbors[i].edge_type));
    }
    const Tensor projected = linear(concat_rows(run), relation[neighbors[i].edge_type]);
    for (std::size_t k = i; k < j; ++k) rows[k] = row(projected, k - i);
    i = j;
  }
  return rows;
}

/// Multi-head attention of the center state over {self} ∪ neighbors. The self
/// slot uses h_x directly (no relation projection).
inline AggregationResult attend_neighbors(const Tensor& h_x, const std::vector<NeighborState>& neighbors,
                                          const std::vector<Tensor>& relation, const Tensor& wq, const Tensor& wk,
                                          const Tensor& wv, std::size_t heads) {
  using namespace numcore;
  const auto d = h_x.size();
  if (wq.rows() != d || d % heads != 0) throw DimensionError("aggregation: projection or head shape mismatch");
  std::vector<Tensor> keys{h_x};
  Mask mask{1};
  for (auto& r : propagate(neighbors, relation, d)) keys.push_back(std::move(r));
  for (const auto& n : neighbors) mask.push_back(n.valid ? 1 : 0);
  const Tensor kv_in = concat_rows(keys);
  const Tensor q = linear(h_x, wq);
  const Tensor k = linear(kv_in, wk);
  const Tensor v = linear(kv_in, wv);
  const auto dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  AggregationResult result;
  std::vector<Tensor> outputs;
  for (std::size_t i = 0; i < heads; ++i) {
    const Tensor qi = heads == 1 ? q : slice_cols(q, i * dh, dh);
    const Tensor ki = heads == 1 ? k : slice_cols(k, i * dh, dh);
    const Tensor vi = heads == 1 ? v : slice_cols(v, i * dh, dh);
    const Tensor alpha = masked_softmax(scale(matmul_bt(qi, ki), inv_sqrt), mask);
    outputs.push_back(matmul_bt(alpha, transpose(vi)));
    result.weights.push_back(alpha);
  }
  result.output = heads == 1 ? outputs.front() : concat_cols(outputs);
  return result;
}

inline AggregationResult aggregate_text_rich(const Tensor& h_x, const std::vector<NeighborState>& neighbors,
                                             const LayerParams& lp, const ModelParams& p, std::size_t heads) {
  if (!lp.has_aggregation()) throw ContractError("aggregate_text_rich: layer 0 has no aggregation weights");
  return attend_neighbors(h_x, neighbors, p.relation, lp.tr_q, lp.tr_k, lp.tr_v, heads);
}

/// h_u = W_phi^(l) z_u.
inline Tensor encode_textless(const graph::HeteroGraph& g, graph::NodeIndex u, std::size_t layer,
                              const ModelParams& p) {
  if (g.is_text_rich(u)) throw ContractError("encode_textless: node '" + g.node(u).id + "' is text-rich");
  const auto& tl = p.textless;
  const std::size_t r = tl.row(u);
  return numcore::linear(numcore::row(tl.z, r), tl.projection(g.node(u).type, layer));
}

/// Textless neighbor states for every slot, projecting same-type rows of z in
/// one product.
inline std::vector<NeighborState> textless_states(const graph::HeteroGraph& g,
                                                  const std::vector<graph::NeighborSlot>& slots, std::size_t layer,
                                                  const ModelParams& p) {
  using namespace numcore;
  std::vector<NeighborState> out(slots.size());
  std::size_t i = 0;
  while (i < slots.size()) {
    if (!slots[i].valid) {
      out[i].edge_type = slots[i].edge_type;
      ++i;
      continue;
    }
    const auto type = g.node(slots[i].node).type;
    std::size_t j = i;
    std::vector<std::size_t> rows;
    while (j < slots.size() && slots[j].valid && g.node(slots[j].node).type == type) {
      if (g.is_text_rich(slots[j].node)) throw ContractError("textless aggregation given a text-rich neighbor");
      rows.push_back(p.textless.row(slots[j].node));
      ++j;
    }
    const Tensor projected = linear(gather_rows(p.textless.z, rows), p.textless.projection(type, layer));
    for (std::size_t k = i; k < j; ++k) out[k] = {row(projected, k - i), slots[k].edge_type, true};
    i = j;
  }
  return out;
}

inline AggregationResult aggregate_textless(const Tensor& h_x, const std::vector<NeighborState>& neighbors,
                                            const LayerParams& lp, const ModelParams& p, std::size_t heads) {
  if (!lp.has_aggregation()) throw ContractError("aggregate_textless: layer 0 has no aggregation weights");
  return attend_neighbors(h_x, neighbors, p.relation, lp.tl_q, lp.tl_k, lp.tl_v, heads);
}

}  // namespace heterformer::model
