#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "heterformer/graph/hetero_graph.hpp"
#include "heterformer/numcore/ops.hpp"

namespace heterformer::text {

using TokenId = std::size_t;

inline constexpr TokenId kClsId = 0;
inline constexpr TokenId kPadId = 1;
inline constexpr TokenId kUnkId = 2;
inline constexpr std::size_t kNumReserved = 3;
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";

inline bool is_special_marker(std::string_view tok) {
  return tok == kClsToken || tok == kPadToken || tok == kUnkToken;
}

/// Lowercases and splits on whitespace and ASCII punctuation. The literal
/// markers [CLS], [PAD] and [UNK] survive as single tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == '[') {
      bool matched = false;
      for (auto marker : {kClsToken, kPadToken, kUnkToken}) {
        if (text.substr(i, marker.size()) == marker) {
          flush();
          tokens.emplace_back(marker);
          i += marker.size() - 1;
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    if (c < 0x80 && (std::isspace(c) || std::ispunct(c))) {
      flush();
    } else {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  flush();
  return tokens;
}

/// Token <-> id map with [CLS]=0, [PAD]=1, [UNK]=2 reserved.
class Vocabulary {
 public:
  Vocabulary() : tokens_{std::string(kClsToken), std::string(kPadToken), std::string(kUnkToken)} {}

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenId id_of(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    return it == index_.end() ? kUnkId : it->second;
  }
  bool contains(std::string_view tok) const { return index_.count(std::string(tok)) != 0; }

  TokenId add(const std::string& tok) {
    if (is_special_marker(tok)) throw ContractError("reserved token '" + tok + "' cannot be added to the vocabulary");
    if (auto it = index_.find(tok); it != index_.end()) return it->second;
    tokens_.push_back(tok);
    index_.emplace(tok, tokens_.size() - 1);
    return tokens_.size() - 1;
  }

  /// One token per line in id order, reserved tokens first.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write vocabulary file '" + path + "'");
    for (const auto& t : tokens_) out << t << '\n';
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open vocabulary file '" + path + "'");
    Vocabulary v;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line_no <= kNumReserved) {
        if (line != v.tokens_[line_no - 1]) {
          throw IoError(path + ":" + std::to_string(line_no) + ": expected reserved token " + v.tokens_[line_no - 1]);
        }
        continue;
      }
      if (line.empty()) throw IoError(path + ":" + std::to_string(line_no) + ": empty token");
      if (v.contains(line)) throw IoError(path + ":" + std::to_string(line_no) + ": duplicate token '" + line + "'");
      v.add(line);
    }
    if (line_no < kNumReserved) throw IoError(path + ": missing reserved tokens");
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Token counts over the text of every text-rich node.
inline std::map<std::string, std::size_t> count_tokens(const graph::HeteroGraph& g) {
  std::map<std::string, std::size_t> counts;
  for (const auto& n : g.nodes()) {
    if (!n.text) continue;
    for (auto& tok : tokenize(*n.text)) {
      if (!is_special_marker(tok)) ++counts[tok];
    }
  }
  return counts;
}

/// Frequency-ranked vocabulary, ties broken lexicographically.
inline Vocabulary build_vocab(const std::map<std::string, std::size_t>& counts, std::size_t max_size,
                              std::size_t min_count) {
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [tok, c] : counts)
    if (c >= min_count) ranked.emplace_back(tok, c);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);
  Vocabulary v;
  for (const auto& [tok, c] : ranked) v.add(tok);
  return v;
}

inline Vocabulary build_vocab(const graph::HeteroGraph& g, std::size_t max_size, std::size_t min_count) {
  bool any_text_rich = false;
  for (const auto& n : g.nodes()) any_text_rich = any_text_rich || n.text.has_value();
  if (!any_text_rich) throw ContractError("build_vocab: graph has no text-rich nodes");
  auto counts = count_tokens(g);
  if (counts.empty()) throw ContractError("build_vocab: empty corpus");
  return build_vocab(counts, max_size, min_count);
}

/// Fixed-length id sequence: [CLS], content tokens, then [PAD] to length.
struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;  // 1 = real token

  std::size_t length() const { return ids.size(); }
  std::size_t real_length() const {
    std::size_t n = 0;
    for (auto m : mask) n += m;
    return n;
  }
};

inline TokenSequence encode_text(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len == 0) throw ContractError("encode_text: sequence length must be positive");
  TokenSequence seq;
  seq.ids.assign(max_len, kPadId);
  seq.mask.assign(max_len, 0);
  seq.ids[0] = kClsId;
  seq.mask[0] = 1;
  std::size_t pos = 1;
  for (const auto& tok : tokenize(text)) {
    if (pos >= max_len) break;
    // Literal markers inside raw text never become [CLS] or [PAD].
    seq.ids[pos] = is_special_marker(tok) ? kUnkId : vocab.id_of(tok);
    seq.mask[pos] = 1;
    ++pos;
  }
  return seq;
}

/// Space-joined content tokens; [UNK] renders as its marker.
inline std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (!seq.mask[i] || seq.ids[i] == kClsId || seq.ids[i] == kPadId) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token(seq.ids[i]);
  }
  return out;
}

/// H0[i] = token_table[ids[i]] + position_table[i] for the first `rows`
/// positions (default: the whole sequence).
inline numcore::Tensor embed_sequence(const TokenSequence& seq, const numcore::Tensor& token_table,
                                      const numcore::Tensor& position_table, std::size_t rows = 0) {
  if (rows == 0) rows = seq.length();
  if (rows > seq.length()) throw DimensionError("embed_sequence: more rows than sequence positions");
  if (rows > position_table.rows()) {
    throw DimensionError("embed_sequence: sequence of length " + std::to_string(rows) + " exceeds " +
                         std::to_string(position_table.rows()) + " position embeddings");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (seq.ids[i] >= token_table.rows()) {
      throw DimensionError("embed_sequence: token id " + std::to_string(seq.ids[i]) + " outside table of " +
                           std::to_string(token_table.rows()) + " rows");
    }
  }
  std::vector<std::size_t> ids(seq.ids.begin(), seq.ids.begin() + static_cast<std::ptrdiff_t>(rows));
  std::vector<std::size_t> positions(rows);
  for (std::size_t i = 0; i < rows; ++i) positions[i] = i;
  return numcore::add(numcore::gather_rows(token_table, ids), numcore::gather_rows(position_table, positions));
}

}  // namespace heterformer::text
