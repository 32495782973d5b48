#pragma once

#include <map>
#include <tuple>
#include <vector>

#include "heterformer/graph/sampling.hpp"
#include "heterformer/model/aggregation.hpp"
#include "heterformer/model/transformer.hpp"
#include "heterformer/text/vocabulary.hpp"

namespace heterformer::model {

/// Token sequences of every text-rich node (textless nodes get an empty entry).
struct TokenizedCorpus {
  std::vector<text::TokenSequence> sequences;

  static TokenizedCorpus build(const graph::HeteroGraph& g, const text::Vocabulary& vocab, std::size_t seq_len) {
    TokenizedCorpus c;
    c.sequences.resize(g.num_nodes());
    for (graph::NodeIndex n = 0; n < g.num_nodes(); ++n) {
      const auto& node = g.node(n);
      if (node.text) c.sequences[n] = text::encode_text(*node.text, vocab, seq_len);
    }
    return c;
  }

  const text::TokenSequence& at(graph::NodeIndex n) const {
    if (n >= sequences.size() || sequences[n].ids.empty()) {
      throw ContractError("no token sequence for node " + std::to_string(n));
    }
    return sequences[n];
  }
};

struct EncodeOptions {
  // Compute only the [CLS] row in the last layer of any stack.
  bool cls_only_final = true;
  // Under no_agg, skip neighbor encoding instead of masking both rows.
  bool skip_masked_aggregation = true;
};

/// Plain-stack states shared across the centers of one batch.
class StateCache {
 public:
  const Tensor* find(graph::NodeIndex n, std::size_t depth, bool cls_only) const {
    auto it = states_.find({n, depth, cls_only});
    if (it == states_.end() && cls_only) it = states_.find({n, depth, false});
    return it == states_.end() ? nullptr : &it->second;
  }
  void put(graph::NodeIndex n, std::size_t depth, bool cls_only, Tensor t) {
    states_[{n, depth, cls_only}] = std::move(t);
  }
  std::size_t size() const { return states_.size(); }
  void clear() { states_.clear(); }

 private:
  std::map<std::tuple<graph::NodeIndex, std::size_t, bool>, Tensor> states_;
};

class Encoder {
 public:
  Encoder(const HeterformerConfig& cfg, const graph::HeteroGraph& g, const TokenizedCorpus& corpus)
      : cfg_(cfg), g_(g), corpus_(corpus) {
    cfg_.validate();
  }

  const HeterformerConfig& config() const { return cfg_; }
  const graph::HeteroGraph& graph() const { return g_; }

  /// Rows of the sequence that go through the layers.
  std::size_t active_rows(const text::TokenSequence& seq) const {
    return cfg_.trim_padding ? seq.real_length() : seq.length();
  }

  Tensor initial_states(graph::NodeIndex n, const ModelParams& p) const {
    const auto& seq = corpus_.at(n);
    return text::embed_sequence(seq, p.token_embedding, p.position_embedding, active_rows(seq));
  }

  Mask token_mask(graph::NodeIndex n) const {
    const auto& seq = corpus_.at(n);
    return Mask(seq.mask.begin(), seq.mask.begin() + static_cast<std::ptrdiff_t>(active_rows(seq)));
  }

  /// States after `depth` plain layers (layers 0..depth-1). With cls_only the
  /// last layer computes row 0 only.
  Tensor plain_states(graph::NodeIndex n, std::size_t depth, const ModelParams& p, StateCache* cache,
                      bool cls_only = false) const {
    if (depth == 0) return initial_states(n, p);
    if (cache) {
      if (const Tensor* hit = cache->find(n, depth, cls_only)) return *hit;
    }
    const Tensor below = plain_states(n, depth - 1, p, cache, false);
    const Mask mask = token_mask(n);
    const auto& lp = p.layers.at(depth - 1);
    Tensor out;
    if (cls_only) {
      const Tensor q = numcore::slice_rows(below, 0, 1);
      out = residual_blocks(q, multi_head_attention(q, below, mask, lp.wq, lp.wk, lp.wv, cfg_.heads), lp,
                            cfg_.layer_norm_eps);
    } else {
      out = plain_transformer_layer(below, mask, lp, cfg_.heads, cfg_.layer_norm_eps);
    }
    if (cache) cache->put(n, depth, cls_only, out);
    return out;
  }

  /// Plain (L+1)-layer transformer over the node text alone; [CLS] row.
  Tensor encode_text_only(graph::NodeIndex n, const ModelParams& p, StateCache* cache = nullptr,
                          const EncodeOptions& opt = {}) const {
    return numcore::row(plain_states(n, cfg_.layers + 1, p, cache, opt.cls_only_final), 0);
  }

  /// Text-only encoding of free text (no graph context).
  Tensor encode_sequence(const text::TokenSequence& seq, const ModelParams& p) const {
    const std::size_t rows = active_rows(seq);
    Tensor H = text::embed_sequence(seq, p.token_embedding, p.position_embedding, rows);
    const Mask mask(seq.mask.begin(), seq.mask.begin() + static_cast<std::ptrdiff_t>(rows));
    for (std::size_t l = 0; l <= cfg_.layers; ++l) {
      H = plain_transformer_layer(H, mask, p.layers[l], cfg_.heads, cfg_.layer_norm_eps);
    }
    return numcore::row(H, 0);
  }

  /// Nested encoding of a text-rich center with its sampled neighbors.
  Tensor encode_center(const graph::NeighborSample& sample, const ModelParams& p, StateCache* cache = nullptr,
                       const EncodeOptions& opt = {}) const {
    if (cfg_.architecture == Architecture::cascaded) return encode_cascaded(sample, p, cache, opt);
    const auto x = sample.center;
    if (!g_.is_text_rich(x)) throw ContractError("encode_center: node '" + g_.node(x).id + "' is not text-rich");
    const bool keep_tr = uses_text_rich(cfg_.ablation);
    const bool keep_tl = uses_textless(cfg_.ablation);
    if (!keep_tr && !keep_tl && opt.skip_masked_aggregation) return encode_text_only(x, p, cache, opt);

    const auto L = cfg_.layers;
    const Mask mask = token_mask(x);
    Tensor H = plain_states(x, 1, p, cache, false);
    for (std::size_t l = 1; l <= L; ++l) {
      const auto& lp = p.layers[l];
      const Tensor h_x = numcore::row(H, 0);
      const bool need_tr = keep_tr || !opt.skip_masked_aggregation;
      const bool need_tl = keep_tl || !opt.skip_masked_aggregation;
      const Tensor tr_row = need_tr ? aggregate_text_rich(h_x, text_rich_states(sample, l, p, cache), lp, p, cfg_.heads).output
                                    : Tensor::zeros({cfg_.dim});
      const Tensor tl_row = need_tl ? aggregate_textless(h_x, textless_states(g_, sample.textless, l, p), lp, p, cfg_.heads).output
                                    : Tensor::zeros({cfg_.dim});
      const Tensor augmented = dispatch(tr_row, H, tl_row);
      if (l == L && opt.cls_only_final) {
        H = joint_cls_row(H, augmented, mask, lp, keep_tr, keep_tl);
      } else {
        H = joint_encode_layer(H, augmented, mask, lp, cfg_.heads, cfg_.layer_norm_eps, keep_tr, keep_tl);
      }
    }
    return numcore::row(H, 0);
  }

  /// Text-rich neighbor [CLS] states at layer l (l plain layers deep).
  std::vector<NeighborState> text_rich_states(const graph::NeighborSample& sample, std::size_t l, const ModelParams& p,
                                              StateCache* cache) const {
    std::vector<NeighborState> out(sample.text_rich.size());
    const bool deepest = l == cfg_.layers;
    for (std::size_t i = 0; i < sample.text_rich.size(); ++i) {
      const auto& slot = sample.text_rich[i];
      out[i].edge_type = slot.edge_type;
      if (!slot.valid) continue;
      out[i].state = numcore::row(plain_states(slot.node, l, p, cache, deepest), 0);
      out[i].valid = true;
    }
    return out;
  }

  /// Cascaded baseline: full plain stacks per node, then one mean
  /// aggregation and a linear map with GELU.
  Tensor encode_cascaded(const graph::NeighborSample& sample, const ModelParams& p, StateCache* cache = nullptr,
                         const EncodeOptions& opt = {}) const {
    using namespace numcore;
    const auto x = sample.center;
    if (!g_.is_text_rich(x)) throw ContractError("encode_cascaded: node '" + g_.node(x).id + "' is not text-rich");
    std::vector<Tensor> members{encode_text_only(x, p, cache, opt)};
    for (const auto& slot : sample.text_rich) {
      if (!slot.valid) continue;
      members.push_back(linear(encode_text_only(slot.node, p, cache, opt), p.relation.at(slot.edge_type)));
    }
    const auto tl = textless_states(g_, sample.textless, 1, p);
    for (const auto& s : tl) {
      if (!s.valid) continue;
      members.push_back(linear(s.state, p.relation.at(s.edge_type)));
    }
    const Tensor pooled = members.size() == 1 ? members.front() : mean_rows(concat_rows(members));
    return gelu(linear(pooled, p.cascade_w, p.cascade_b));
  }

  /// Output embedding of a textless node: layer-1 projection of z.
  Tensor textless_embedding(graph::NodeIndex u, const ModelParams& p) const { return encode_textless(g_, u, 1, p); }

 private:
  Tensor joint_cls_row(const Tensor& H, const Tensor& augmented, const Mask& mask, const LayerParams& lp, bool keep_tr,
                       bool keep_tl) const {
    Mask key_mask;
    key_mask.reserve(mask.size() + 2);
    key_mask.push_back(keep_tr ? 1 : 0);
    key_mask.insert(key_mask.end(), mask.begin(), mask.end());
    key_mask.push_back(keep_tl ? 1 : 0);
    const Tensor q = numcore::slice_rows(H, 0, 1);
    return residual_blocks(q, multi_head_attention(q, augmented, key_mask, lp.wq, lp.wk, lp.wv, cfg_.heads), lp,
                           cfg_.layer_norm_eps);
  }

  HeterformerConfig cfg_;
  const graph::HeteroGraph& g_;
  const TokenizedCorpus& corpus_;
};

}  // namespace heterformer::model
