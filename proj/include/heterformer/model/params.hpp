#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "heterformer/graph/hetero_graph.hpp"
#include "heterformer/model/config.hpp"
#include "heterformer/numcore/random.hpp"

namespace heterformer::model {

using numcore::Tensor;

/// Weights of one transformer layer. The aggregation projections exist only
/// for layers 1..L; layer 0 is a plain transformer layer.
struct LayerParams {
  Tensor wq, wk, wv;
  Tensor tr_q, tr_k, tr_v;  // text-rich neighbor aggregation
  Tensor tl_q, tl_k, tl_v;  // textless neighbor aggregation
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Tensor ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;

  bool has_aggregation() const { return tr_q.defined(); }
};

inline constexpr std::size_t kNoRow = std::numeric_limits<std::size_t>::max();

/// Low-dimensional textless node embeddings z and per-type, per-layer
/// projections W_phi (d x d_z) for layers 1..L.
struct TextlessParams {
  Tensor z;                                      // [num textless nodes x d_z]
  std::vector<std::vector<Tensor>> projections;  // [textless type slot][layer - 1]
  std::vector<std::size_t> row_of_node;          // graph node -> row of z
  std::vector<std::size_t> slot_of_type;         // node type -> projection slot
  std::vector<std::size_t> type_of_slot;

  std::size_t row(graph::NodeIndex node) const {
    const auto r = node < row_of_node.size() ? row_of_node[node] : kNoRow;
    if (r == kNoRow) throw ContractError("node " + std::to_string(node) + " has no textless embedding");
    return r;
  }
  const Tensor& projection(std::size_t node_type, std::size_t layer) const {
    const auto slot = node_type < slot_of_type.size() ? slot_of_type[node_type] : kNoRow;
    if (slot == kNoRow) throw ContractError("node type " + std::to_string(node_type) + " is not textless");
    if (layer < 1 || layer > projections[slot].size()) {
      throw ContractError("textless projection requested for layer " + std::to_string(layer));
    }
    return projections[slot][layer - 1];
  }
};

struct NamedParameter {
  std::string name;
  Tensor tensor;
  bool weight_decay = true;
  bool textless = false;  // member of TextlessParams (the only group warm-up trains)
};

struct ModelParams {
  Tensor token_embedding;     // [vocab x d]
  Tensor position_embedding;  // [seq_len x d]
  std::vector<LayerParams> layers;  // L + 1 entries
  TextlessParams textless;
  std::vector<Tensor> relation;  // one d x d matrix per edge type
  Tensor cascade_w, cascade_b;   // cascaded baseline output map

  /// Every learnable tensor under a stable name, in a fixed order.
  std::vector<NamedParameter> named_parameters(const graph::NodeTypeSchema& schema) const {
    std::vector<NamedParameter> out;
    out.push_back({"token_embedding", token_embedding, true, false});
    out.push_back({"position_embedding", position_embedding, true, false});
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& lp = layers[l];
      const std::string p = "layer" + std::to_string(l) + ".";
      out.push_back({p + "attn.wq", lp.wq});
      out.push_back({p + "attn.wk", lp.wk});
      out.push_back({p + "attn.wv", lp.wv});
      if (lp.has_aggregation()) {
        out.push_back({p + "agg_text_rich.wq", lp.tr_q});
        out.push_back({p + "agg_text_rich.wk", lp.tr_k});
        out.push_back({p + "agg_text_rich.wv", lp.tr_v});
        out.push_back({p + "agg_textless.wq", lp.tl_q});
        out.push_back({p + "agg_textless.wk", lp.tl_k});
        out.push_back({p + "agg_textless.wv", lp.tl_v});
      }
      out.push_back({p + "ffn.w1", lp.ffn_w1});
      out.push_back({p + "ffn.b1", lp.ffn_b1});
      out.push_back({p + "ffn.w2", lp.ffn_w2});
      out.push_back({p + "ffn.b2", lp.ffn_b2});
      out.push_back({p + "ln1.gamma", lp.ln1_gamma, false});
      out.push_back({p + "ln1.beta", lp.ln1_beta, false});
      out.push_back({p + "ln2.gamma", lp.ln2_gamma, false});
      out.push_back({p + "ln2.beta", lp.ln2_beta, false});
    }
    out.push_back({"textless.z", textless.z, false, true});
    for (std::size_t s = 0; s < textless.projections.size(); ++s) {
      const auto& type_name = schema.node_type(textless.type_of_slot[s]).name;
      for (std::size_t l = 0; l < textless.projections[s].size(); ++l) {
        out.push_back({"textless.proj." + type_name + ".layer" + std::to_string(l + 1), textless.projections[s][l],
                       true, true});
      }
    }
    for (std::size_t r = 0; r < relation.size(); ++r) {
      out.push_back({"relation." + schema.edge_type(r).name, relation[r]});
    }
    out.push_back({"cascade.w", cascade_w});
    out.push_back({"cascade.b", cascade_b});
    return out;
  }

  void set_tracked(bool on, const graph::NodeTypeSchema& schema) {
    for (auto& p : named_parameters(schema)) p.tensor.set_tracked(on);
  }

  void zero_grad(const graph::NodeTypeSchema& schema) {
    for (auto& p : named_parameters(schema)) p.tensor.zero_grad();
  }

  /// Deep copy (fresh storage for every tensor).
  ModelParams clone(const graph::NodeTypeSchema& schema) const;

  /// Random initialization: Gaussian(0, init_std) for embeddings and
  /// attention/feed-forward weights, identity-plus-noise relation matrices,
  /// unit-variance z and W_phi ~ Gaussian(0, 1/sqrt(d_z)) so projected
  /// textless states start at the scale of normalized token states.
  static ModelParams initialize(const HeterformerConfig& cfg, const graph::HeteroGraph& g, std::size_t vocab_size,
                                std::uint64_t seed) {
    cfg.validate();
    const auto d = cfg.dim;
    const auto h = cfg.ffn_width();
    const auto& schema = g.schema();
    numcore::Rng rng(numcore::derive_seed(seed, {0x1417ULL}));
    auto normal = [&](numcore::Shape shape, double stddev) { return numcore::gaussian(std::move(shape), stddev, rng); };
    auto constant = [](numcore::Shape shape, double v) {
      Tensor t = Tensor::zeros(std::move(shape));
      for (double& x : t.mutable_data()) x = v;
      return t;
    };
    ModelParams p;
    p.token_embedding = normal({vocab_size, d}, cfg.init_std);
    p.position_embedding = normal({cfg.seq_len, d}, cfg.init_std);
    for (std::size_t l = 0; l <= cfg.layers; ++l) {
      LayerParams lp;
      lp.wq = normal({d, d}, cfg.init_std);
      lp.wk = normal({d, d}, cfg.init_std);
      lp.wv = normal({d, d}, cfg.init_std);
      if (l >= 1) {
        lp.tr_q = normal({d, d}, cfg.init_std);
        lp.tr_k = normal({d, d}, cfg.init_std);
        lp.tr_v = normal({d, d}, cfg.init_std);
        lp.tl_q = normal({d, d}, cfg.init_std);
        lp.tl_k = normal({d, d}, cfg.init_std);
        lp.tl_v = normal({d, d}, cfg.init_std);
      }
      lp.ffn_w1 = normal({h, d}, cfg.init_std);
      lp.ffn_b1 = Tensor::zeros({h});
      lp.ffn_w2 = normal({d, h}, cfg.init_std);
      lp.ffn_b2 = Tensor::zeros({d});
      lp.ln1_gamma = constant({d}, 1.0);
      lp.ln1_beta = Tensor::zeros({d});
      lp.ln2_gamma = constant({d}, 1.0);
      lp.ln2_beta = Tensor::zeros({d});
      p.layers.push_back(std::move(lp));
    }
    auto& tl = p.textless;
    tl.slot_of_type.assign(schema.node_types().size(), kNoRow);
    for (std::size_t t = 0; t < schema.node_types().size(); ++t) {
      if (schema.is_text_rich(t)) continue;
      tl.slot_of_type[t] = tl.type_of_slot.size();
      tl.type_of_slot.push_back(t);
    }
    tl.row_of_node.assign(g.num_nodes(), kNoRow);
    std::size_t rows = 0;
    for (graph::NodeIndex n = 0; n < g.num_nodes(); ++n) {
      if (!g.is_text_rich(n)) tl.row_of_node[n] = rows++;
    }
    tl.z = normal({std::max<std::size_t>(rows, 1), cfg.textless_dim}, 1.0);
    const double proj_std = 1.0 / std::sqrt(static_cast<double>(cfg.textless_dim));
    for (std::size_t s = 0; s < tl.type_of_slot.size(); ++s) {
      std::vector<Tensor> per_layer;
      for (std::size_t l = 1; l <= cfg.layers; ++l) per_layer.push_back(normal({d, cfg.textless_dim}, proj_std));
      tl.projections.push_back(std::move(per_layer));
    }
    for (std::size_t r = 0; r < schema.edge_types().size(); ++r) {
      Tensor w = normal({d, d}, cfg.init_std);
      for (std::size_t i = 0; i < d; ++i) w.mutable_data()[i * d + i] += 1.0;
      p.relation.push_back(std::move(w));
    }
    p.cascade_w = normal({d, d}, cfg.init_std);
    for (std::size_t i = 0; i < d; ++i) p.cascade_w.mutable_data()[i * d + i] += 1.0;
    p.cascade_b = Tensor::zeros({d});
    p.set_tracked(true, schema);
    return p;
  }
};

inline ModelParams ModelParams::clone(const graph::NodeTypeSchema& schema) const {
  (void)schema;
  ModelParams copy = *this;
  auto rebind = [](Tensor& t) { t = t.clone(); };
  rebind(copy.token_embedding);
  rebind(copy.position_embedding);
  for (auto& lp : copy.layers) {
    for (Tensor* t : {&lp.wq, &lp.wk, &lp.wv, &lp.tr_q, &lp.tr_k, &lp.tr_v, &lp.tl_q, &lp.tl_k, &lp.tl_v, &lp.ffn_w1,
                      &lp.ffn_b1, &lp.ffn_w2, &lp.ffn_b2, &lp.ln1_gamma, &lp.ln1_beta, &lp.ln2_gamma, &lp.ln2_beta}) {
      if (t->defined()) rebind(*t);
    }
  }
  rebind(copy.textless.z);
  for (auto& per_layer : copy.textless.projections)
    for (auto& t : per_layer) rebind(t);
  for (auto& t : copy.relation) rebind(t);
  rebind(copy.cascade_w);
  rebind(copy.cascade_b);
  return copy;
}

}  // namespace heterformer::model
