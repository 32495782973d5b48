#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "heterformer/error.hpp"

namespace heterformer::graph {

struct NodeType {
  std::string name;
  bool text_rich = false;
};

struct EdgeType {
  std::string name;
  std::size_t src_type = 0;
  std::size_t dst_type = 0;
};

/// Node and edge type declarations of a heterogeneous text-rich network.
///
/// Text file form, one declaration per line, `#` starts a comment:
///
///     node paper text
///     node author textless
///     edge writes author paper
class NodeTypeSchema {
 public:
  NodeTypeSchema() = default;

  std::size_t add_node_type(std::string name, bool text_rich) {
    if (find_node_type(name)) throw ContractError("duplicate node type '" + name + "'");
    if (find_edge_type(name)) throw ContractError("node type '" + name + "' clashes with an edge type name");
    node_types_.push_back({std::move(name), text_rich});
    return node_types_.size() - 1;
  }

  std::size_t add_edge_type(std::string name, const std::string& src, const std::string& dst) {
    if (find_edge_type(name) || find_node_type(name)) throw ContractError("duplicate type name '" + name + "'");
    edge_types_.push_back({std::move(name), node_type_index(src), node_type_index(dst)});
    return edge_types_.size() - 1;
  }

  const std::vector<NodeType>& node_types() const { return node_types_; }
  const std::vector<EdgeType>& edge_types() const { return edge_types_; }
  const NodeType& node_type(std::size_t i) const { return node_types_.at(i); }
  const EdgeType& edge_type(std::size_t i) const { return edge_types_.at(i); }

  std::optional<std::size_t> find_node_type(const std::string& name) const {
    for (std::size_t i = 0; i < node_types_.size(); ++i)
      if (node_types_[i].name == name) return i;
    return std::nullopt;
  }
  std::optional<std::size_t> find_edge_type(const std::string& name) const {
    for (std::size_t i = 0; i < edge_types_.size(); ++i)
      if (edge_types_[i].name == name) return i;
    return std::nullopt;
  }
  std::size_t node_type_index(const std::string& name) const {
    if (auto i = find_node_type(name)) return *i;
    throw ContractError("unknown node type '" + name + "'");
  }
  std::size_t edge_type_index(const std::string& name) const {
    if (auto i = find_edge_type(name)) return *i;
    throw ContractError("unknown edge type '" + name + "'");
  }

  bool is_text_rich(std::size_t node_type) const { return node_types_.at(node_type).text_rich; }

  /// Type of the node at the other end of an edge of `edge_type` seen from a
  /// node of `from_type`, or nullopt if `from_type` is not an endpoint.
  std::optional<std::size_t> opposite_type(std::size_t edge_type, std::size_t from_type) const {
    const auto& e = edge_types_.at(edge_type);
    if (e.src_type == from_type) return e.dst_type;
    if (e.dst_type == from_type) return e.src_type;
    return std::nullopt;
  }

  void validate() const {
    if (node_types_.size() + edge_types_.size() <= 2) {
      throw ContractError("schema must declare more than two node plus edge types in total");
    }
    bool any_text_rich = false;
    for (const auto& t : node_types_) any_text_rich = any_text_rich || t.text_rich;
    if (!any_text_rich) throw ContractError("schema needs at least one text-rich node type");
  }

  std::string to_text() const {
    std::ostringstream os;
    for (const auto& t : node_types_) os << "node " << t.name << ' ' << (t.text_rich ? "text" : "textless") << '\n';
    for (const auto& e : edge_types_) {
      os << "edge " << e.name << ' ' << node_types_[e.src_type].name << ' ' << node_types_[e.dst_type].name << '\n';
    }
    return os.str();
  }

  static NodeTypeSchema parse(std::istream& in, const std::string& source = "schema") {
    NodeTypeSchema schema;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      std::istringstream ls(line);
      std::string kind;
      if (!(ls >> kind)) continue;
      auto fail = [&](const std::string& why) {
        throw IoError(source + ":" + std::to_string(line_no) + ": " + why);
      };
      try {
        if (kind == "node") {
          std::string name, flag, extra;
          if (!(ls >> name >> flag) || (ls >> extra)) fail("expected 'node <name> text|textless'");
          if (flag != "text" && flag != "textless") fail("text flag must be 'text' or 'textless', got '" + flag + "'");
          schema.add_node_type(name, flag == "text");
        } else if (kind == "edge") {
          std::string name, src, dst, extra;
          if (!(ls >> name >> src >> dst) || (ls >> extra)) fail("expected 'edge <name> <src_type> <dst_type>'");
          schema.add_edge_type(name, src, dst);
        } else {
          fail("unknown declaration '" + kind + "'");
        }
      } catch (const ContractError& e) {
        fail(e.what());
      }
    }
    schema.validate();
    return schema;
  }

  static NodeTypeSchema load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema file '" + path + "'");
    return parse(in, path);
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write schema file '" + path + "'");
    out << to_text();
  }

 private:
  std::vector<NodeType> node_types_;
  std::vector<EdgeType> edge_types_;
};

}  // namespace heterformer::graph
