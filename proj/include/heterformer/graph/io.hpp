#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "heterformer/graph/hetero_graph.hpp"

namespace heterformer::graph {

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

/// Reads `id<TAB>type<TAB>text` node records and `src<TAB>dst<TAB>edge_type`
/// edge records. Duplicate edges collapse; errors carry file and line.
inline HeteroGraph load_graph(const std::string& nodes_path, const std::string& edges_path,
                              const NodeTypeSchema& schema) {
  HeteroGraph g(schema);
  {
    std::ifstream in(nodes_path, std::ios::binary);
    if (!in) throw IoError("cannot open nodes file '" + nodes_path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      detail::strip_cr(line);
      if (line.empty()) continue;
      auto fail = [&](const std::string& why) {
        throw IoError(nodes_path + ":" + std::to_string(line_no) + ": " + why);
      };
      auto cols = detail::split_tabs(line);
      if (cols.size() < 2 || cols.size() > 3) fail("expected 'id<TAB>type<TAB>text', got " + std::to_string(cols.size()) + " columns");
      auto type = schema.find_node_type(cols[1]);
      if (!type) fail("unknown node type '" + cols[1] + "'");
      std::optional<std::string> text;
      if (cols.size() == 3) text = cols[2];
      if (!schema.is_text_rich(*type) && text && !text->empty()) fail("text on textless node '" + cols[0] + "'");
      try {
        g.add_node(cols[0], *type, std::move(text));
      } catch (const ContractError& e) {
        fail(e.what());
      }
    }
  }
  {
    std::ifstream in(edges_path, std::ios::binary);
    if (!in) throw IoError("cannot open edges file '" + edges_path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      detail::strip_cr(line);
      if (line.empty()) continue;
      auto fail = [&](const std::string& why) {
        throw IoError(edges_path + ":" + std::to_string(line_no) + ": " + why);
      };
      auto cols = detail::split_tabs(line);
      if (cols.size() != 3) fail("expected 'src<TAB>dst<TAB>edge_type', got " + std::to_string(cols.size()) + " columns");
      auto type = schema.find_edge_type(cols[2]);
      if (!type) fail("unknown edge type '" + cols[2] + "'");
      auto src = g.find(cols[0]);
      if (!src) fail("edge references missing node id '" + cols[0] + "'");
      auto dst = g.find(cols[1]);
      if (!dst) fail("edge references missing node id '" + cols[1] + "'");
      try {
        g.add_edge(*src, *dst, *type);
      } catch (const ContractError& e) {
        fail(e.what());
      }
    }
  }
  return g;
}

inline HeteroGraph load_graph(const std::string& nodes_path, const std::string& edges_path,
                              const std::string& schema_path) {
  return load_graph(nodes_path, edges_path, NodeTypeSchema::load(schema_path));
}

inline void write_graph(const HeteroGraph& g, const std::string& nodes_path, const std::string& edges_path) {
  std::ofstream nodes(nodes_path, std::ios::binary);
  if (!nodes) throw IoError("cannot write nodes file '" + nodes_path + "'");
  for (const auto& n : g.nodes()) {
    nodes << n.id << '\t' << g.schema().node_type(n.type).name << '\t' << n.text.value_or("") << '\n';
  }
  std::ofstream edges(edges_path, std::ios::binary);
  if (!edges) throw IoError("cannot write edges file '" + edges_path + "'");
  for (const auto& e : g.edges()) {
    edges << g.node(e.src).id << '\t' << g.node(e.dst).id << '\t' << g.schema().edge_type(e.type).name << '\n';
  }
}

/// `id<TAB>label` lines.
inline std::map<std::string, std::size_t> load_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open labels file '" + path + "'");
  std::map<std::string, std::size_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto cols = detail::split_tabs(line);
    if (cols.size() != 2) throw IoError(path + ":" + std::to_string(line_no) + ": expected 'id<TAB>label'");
    try {
      labels[cols[0]] = static_cast<std::size_t>(std::stoul(cols[1]));
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(line_no) + ": label '" + cols[1] + "' is not a non-negative integer");
    }
  }
  return labels;
}

}  // namespace heterformer::graph
