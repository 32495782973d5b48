#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "heterformer/graph/schema.hpp"

namespace heterformer::graph {

using NodeIndex = std::size_t;

struct Node {
  std::string id;
  std::size_t type = 0;
  std::optional<std::string> text;
};

struct Edge {
  NodeIndex src = 0;
  NodeIndex dst = 0;
  std::size_t type = 0;

  /// Endpoint opposite to `node`.
  NodeIndex other(NodeIndex node) const { return node == src ? dst : src; }
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Typed nodes plus typed undirected edges with a per-node, per-edge-type
/// adjacency index. Edges are stored once and indexed from both endpoints.
class HeteroGraph {
 public:
  explicit HeteroGraph(NodeTypeSchema schema) : schema_(std::move(schema)) { schema_.validate(); }

  const NodeTypeSchema& schema() const { return schema_; }

  NodeIndex add_node(const std::string& id, std::size_t type, std::optional<std::string> text) {
    if (type >= schema_.node_types().size()) throw ContractError("node '" + id + "' has unknown type index");
    if (id.empty()) throw ContractError("empty node id");
    if (index_.count(id)) throw ContractError("duplicate node id '" + id + "'");
    const bool text_rich = schema_.is_text_rich(type);
    if (text_rich && !text) text = std::string();
    if (!text_rich && text && !text->empty()) {
      throw ContractError("text on textless node '" + id + "' of type '" + schema_.node_type(type).name + "'");
    }
    if (!text_rich) text.reset();
    if (text && text->find('\t') != std::string::npos) throw ContractError("tab inside text of node '" + id + "'");
    nodes_.push_back({id, type, std::move(text)});
    adjacency_.emplace_back(schema_.edge_types().size());
    index_.emplace(id, nodes_.size() - 1);
    return nodes_.size() - 1;
  }

  NodeIndex add_node(const std::string& id, const std::string& type_name, std::optional<std::string> text) {
    return add_node(id, schema_.node_type_index(type_name), std::move(text));
  }

  /// Adds an undirected typed edge; returns false when it already exists.
  bool add_edge(NodeIndex src, NodeIndex dst, std::size_t type) {
    const auto& et = schema_.edge_type(type);
    if (src >= nodes_.size() || dst >= nodes_.size()) throw ContractError("edge endpoint out of range");
    if (src == dst) throw ContractError("self-loop on node '" + nodes_[src].id + "'");
    if (nodes_[src].type != et.src_type || nodes_[dst].type != et.dst_type) {
      throw ContractError("edge '" + et.name + "' expects " + schema_.node_type(et.src_type).name + " -> " +
                          schema_.node_type(et.dst_type).name + ", got " + nodes_[src].id + " (" +
                          schema_.node_type(nodes_[src].type).name + ") -> " + nodes_[dst].id + " (" +
                          schema_.node_type(nodes_[dst].type).name + ")");
    }
    const auto key = edge_key(src, dst, type);
    if (!edge_keys_.insert(key).second) return false;
    edges_.push_back({src, dst, type});
    adjacency_[src][type].push_back(dst);
    adjacency_[dst][type].push_back(src);
    return true;
  }

  bool add_edge(const std::string& src, const std::string& dst, const std::string& type_name) {
    return add_edge(require(src), require(dst), schema_.edge_type_index(type_name));
  }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeIndex i) const { return nodes_.at(i); }

  std::optional<NodeIndex> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  NodeIndex require(const std::string& id) const {
    if (auto i = find(id)) return *i;
    throw ContractError("unknown node id '" + id + "'");
  }

  bool is_text_rich(NodeIndex i) const { return schema_.is_text_rich(nodes_.at(i).type); }

  std::span<const NodeIndex> neighbors(NodeIndex node, std::size_t edge_type) const {
    return adjacency_.at(node).at(edge_type);
  }

  std::size_t degree(NodeIndex node) const {
    std::size_t d = 0;
    for (const auto& list : adjacency_.at(node)) d += list.size();
    return d;
  }

  bool has_edge(NodeIndex a, NodeIndex b, std::size_t type) const {
    return edge_keys_.count(edge_key(a, b, type)) != 0;
  }

  std::vector<Edge> edges_of_type(std::size_t type) const {
    std::vector<Edge> out;
    for (const auto& e : edges_)
      if (e.type == type) out.push_back(e);
    return out;
  }

  std::vector<NodeIndex> nodes_of_type(std::size_t type) const {
    std::vector<NodeIndex> out;
    for (NodeIndex i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].type == type) out.push_back(i);
    return out;
  }

  /// Adjacency as sorted (node id, edge type, neighbor id) triples; equal
  /// for two graphs iff they have the same typed neighborhoods.
  std::vector<std::tuple<std::string, std::string, std::string>> adjacency_triples() const {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (NodeIndex i = 0; i < nodes_.size(); ++i)
      for (std::size_t t = 0; t < adjacency_[i].size(); ++t)
        for (NodeIndex j : adjacency_[i][t]) out.emplace_back(nodes_[i].id, schema_.edge_type(t).name, nodes_[j].id);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct EdgeKey {
    NodeIndex lo, hi;
    std::size_t type;
    friend bool operator==(const EdgeKey&, const EdgeKey&) = default;
  };
  struct EdgeKeyHash {
    std::size_t operator()(const EdgeKey& k) const {
      std::size_t h = std::hash<std::size_t>{}(k.lo);
      h ^= std::hash<std::size_t>{}(k.hi) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h ^= std::hash<std::size_t>{}(k.type) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      return h;
    }
  };

  static EdgeKey edge_key(NodeIndex a, NodeIndex b, std::size_t type) {
    if (a > b) std::swap(a, b);
    return {a, b, type};
  }

  NodeTypeSchema schema_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::vector<NodeIndex>>> adjacency_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::unordered_set<EdgeKey, EdgeKeyHash> edge_keys_;
};

}  // namespace heterformer::graph
