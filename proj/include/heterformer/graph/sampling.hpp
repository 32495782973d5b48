#pragma once

#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "heterformer/graph/hetero_graph.hpp"
#include "heterformer/numcore/random.hpp"

namespace heterformer::graph {

inline constexpr NodeIndex kNoNode = std::numeric_limits<NodeIndex>::max();

/// Per-edge-type neighbor budget, indexed by edge type.
class Budgets {
 public:
  Budgets() = default;
  explicit Budgets(std::vector<std::size_t> per_type) : per_type_(std::move(per_type)) {}

  static Budgets uniform(const NodeTypeSchema& schema, std::size_t count) {
    return Budgets(std::vector<std::size_t>(schema.edge_types().size(), count));
  }

  /// Parses `type=count,type=count`; unnamed types get 0.
  static Budgets parse(const std::string& spec, const NodeTypeSchema& schema) {
    std::vector<std::size_t> per_type(schema.edge_types().size(), 0);
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      auto eq = item.find('=');
      if (eq == std::string::npos) throw ContractError("budget entry '" + item + "' is not type=count");
      const auto type = schema.edge_type_index(item.substr(0, eq));
      try {
        std::size_t used = 0;
        const auto value = item.substr(eq + 1);
        per_type[type] = std::stoul(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ContractError("budget entry '" + item + "' has a non-integer count");
      }
    }
    return Budgets(std::move(per_type));
  }

  std::string to_string(const NodeTypeSchema& schema) const {
    std::string out;
    for (std::size_t t = 0; t < per_type_.size(); ++t) {
      if (!out.empty()) out += ',';
      out += schema.edge_type(t).name + "=" + std::to_string(per_type_[t]);
    }
    return out;
  }

  std::size_t operator[](std::size_t edge_type) const {
    return edge_type < per_type_.size() ? per_type_[edge_type] : 0;
  }
  std::size_t& at(std::size_t edge_type) {
    if (edge_type >= per_type_.size()) per_type_.resize(edge_type + 1, 0);
    return per_type_[edge_type];
  }
  const std::vector<std::size_t>& values() const { return per_type_; }

 private:
  std::vector<std::size_t> per_type_;
};

struct NeighborSlot {
  NodeIndex node = kNoNode;
  std::size_t edge_type = 0;
  bool valid = false;
};

/// Budget-padded neighbor lists of one center, split into text-rich and
/// textless neighbors. Invalid slots are padding.
struct NeighborSample {
  NodeIndex center = kNoNode;
  std::vector<NeighborSlot> text_rich;
  std::vector<NeighborSlot> textless;

  static std::size_t count_valid(const std::vector<NeighborSlot>& slots) {
    std::size_t n = 0;
    for (const auto& s : slots) n += s.valid ? 1 : 0;
    return n;
  }
  std::size_t num_text_rich() const { return count_valid(text_rich); }
  std::size_t num_textless() const { return count_valid(textless); }
};

/// Uniform sampling without replacement per edge type. A type with fewer
/// neighbors than its budget contributes all of them plus masked padding.
inline NeighborSample sample_neighbors(const HeteroGraph& g, NodeIndex center, const Budgets& budgets,
                                       std::uint64_t seed) {
  if (center >= g.num_nodes()) throw ContractError("sample_neighbors: unknown center index " + std::to_string(center));
  if (!g.is_text_rich(center)) {
    throw ContractError("sample_neighbors: center '" + g.node(center).id + "' is not text-rich");
  }
  const auto& schema = g.schema();
  const auto center_type = g.node(center).type;
  NeighborSample sample;
  sample.center = center;
  std::vector<NodeIndex> pool;
  for (std::size_t t = 0; t < schema.edge_types().size(); ++t) {
    const auto other_type = schema.opposite_type(t, center_type);
    if (!other_type) continue;
    const std::size_t budget = budgets[t];
    auto& target = schema.is_text_rich(*other_type) ? sample.text_rich : sample.textless;
    const auto adj = g.neighbors(center, t);
    pool.assign(adj.begin(), adj.end());
    const std::size_t take = std::min(budget, pool.size());
    numcore::Rng rng(numcore::derive_seed(seed, {center, t}));
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
      target.push_back({pool[i], t, true});
    }
    for (std::size_t i = take; i < budget; ++i) target.push_back({kNoNode, t, false});
  }
  return sample;
}

inline NeighborSample sample_neighbors(const HeteroGraph& g, const std::string& center_id, const Budgets& budgets,
                                       std::uint64_t seed) {
  auto idx = g.find(center_id);
  if (!idx) throw ContractError("sample_neighbors: unknown center '" + center_id + "'");
  return sample_neighbors(g, *idx, budgets, seed);
}

}  // namespace heterformer::graph
