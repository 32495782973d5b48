#pragma once

#include <cstddef>
#include <sstream>
#include <string>

#include "heterformer/error.hpp"
#include "heterformer/graph/sampling.hpp"
#include "heterformer/numcore/ops.hpp"

namespace heterformer::model {

enum class Ablation { full, no_agg, no_tr, no_tl };
enum class Architecture { nested, cascaded };

inline std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_agg: return "no_agg";
    case Ablation::no_tr: return "no_tr";
    case Ablation::no_tl: return "no_tl";
  }
  return "full";
}

inline Ablation parse_ablation(const std::string& s) {
  if (s == "full") return Ablation::full;
  if (s == "no_agg") return Ablation::no_agg;
  if (s == "no_tr") return Ablation::no_tr;
  if (s == "no_tl") return Ablation::no_tl;
  throw ContractError("unknown ablation '" + s + "' (expected full|no_agg|no_tr|no_tl)");
}

inline std::string to_string(Architecture a) { return a == Architecture::nested ? "nested" : "cascaded"; }

inline Architecture parse_architecture(const std::string& s) {
  if (s == "nested") return Architecture::nested;
  if (s == "cascaded") return Architecture::cascaded;
  throw ContractError("unknown architecture '" + s + "' (expected nested|cascaded)");
}

/// Whether each aggregation row takes part in joint encoding.
inline bool uses_text_rich(Ablation a) { return a == Ablation::full || a == Ablation::no_tl; }
inline bool uses_textless(Ablation a) { return a == Ablation::full || a == Ablation::no_tr; }

struct HeterformerConfig {
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;  // nested layers L; the stack has L + 1 transformer layers
  std::size_t seq_len = 32;
  std::size_t mlp_hidden = 0;  // 0 means 4 * dim
  std::size_t textless_dim = 64;
  graph::Budgets budgets;
  Ablation ablation = Ablation::full;
  Architecture architecture = Architecture::nested;
  double layer_norm_eps = numcore::kLayerNormEps;
  double init_std = 0.02;
  // Run transformer layers on the real-token prefix only. Padding is masked
  // and contiguous, so the encodings of real positions are unchanged.
  bool trim_padding = true;

  std::size_t head_dim() const { return dim / heads; }
  std::size_t ffn_width() const { return mlp_hidden == 0 ? 4 * dim : mlp_hidden; }

  void validate() const {
    if (dim == 0 || heads == 0) throw ContractError("hidden width and head count must be positive");
    if (dim % heads != 0) {
      throw ContractError("head count " + std::to_string(heads) + " does not divide hidden width " + std::to_string(dim));
    }
    if (layers < 1) throw ContractError("need at least one nested layer");
    if (seq_len < 1) throw ContractError("sequence length must be positive");
    if (textless_dim < 1) throw ContractError("textless embedding width must be positive");
  }

  /// Fields that determine parameter shapes; checkpoints carry their digest.
  std::string structure_text() const {
    std::ostringstream os;
    os << "dim=" << dim << ";heads=" << heads << ";layers=" << layers << ";seq_len=" << seq_len
       << ";mlp_hidden=" << ffn_width() << ";textless_dim=" << textless_dim;
    return os.str();
  }

  /// Canonical key=value rendering.
  std::string to_text(const graph::NodeTypeSchema& schema) const {
    std::ostringstream os;
    os << "model.dim = " << dim << '\n'
       << "model.heads = " << heads << '\n'
       << "model.layers = " << layers << '\n'
       << "model.seq_len = " << seq_len << '\n'
       << "model.mlp_hidden = " << ffn_width() << '\n'
       << "model.textless_dim = " << textless_dim << '\n'
       << "model.budgets = " << budgets.to_string(schema) << '\n'
       << "model.ablation = " << to_string(ablation) << '\n'
       << "model.arch = " << to_string(architecture) << '\n';
    return os.str();
  }
};

/// FNV-1a 64.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t structure_digest(const HeterformerConfig& cfg) { return fnv1a(cfg.structure_text()); }

}  // namespace heterformer::model
