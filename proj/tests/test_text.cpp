#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "heterformer/synth/generator.hpp"
#include "heterformer/text/vocabulary.hpp"
#include "support.hpp"

using namespace heterformer;
using namespace heterformer::text;
using numcore::Tensor;

namespace {

graph::HeteroGraph corpus_graph(const std::vector<std::string>& docs) {
  graph::NodeTypeSchema s;
  s.add_node_type("doc", true);
  s.add_node_type("tag", false);
  s.add_edge_type("has", "tag", "doc");
  graph::HeteroGraph g(s);
  for (std::size_t i = 0; i < docs.size(); ++i) g.add_node("d" + std::to_string(i), 0, docs[i]);
  return g;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("Graph-based, Text!  mining"), (std::vector<std::string>{"graph", "based", "text", "mining"}));
  EXPECT_EQ(tokenize("a [CLS] b"), (std::vector<std::string>{"a", "[CLS]", "b"}));
}

TEST(BuildVocab, FrequencyOrderWithReservedIdsFirst) {
  const auto v = build_vocab(corpus_graph({"a b b"}), 100, 1);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v.token(0), "[CLS]");
  EXPECT_EQ(v.token(1), "[PAD]");
  EXPECT_EQ(v.token(2), "[UNK]");
  EXPECT_EQ(v.token(3), "b");
  EXPECT_EQ(v.token(4), "a");
}

TEST(BuildVocab, MinCountAndTies) {
  const auto v = build_vocab(corpus_graph({"a b b"}), 100, 2);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(3), "b");
  const auto t = build_vocab(corpus_graph({"zeta alpha mid"}), 2, 1);
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t.token(3), "alpha");
  EXPECT_EQ(t.token(4), "mid");
}

TEST(BuildVocab, EmptyCorpusIsAnError) {
  EXPECT_THROW(build_vocab(corpus_graph({"", "  ,. "}), 10, 1), ContractError);
}

TEST(BuildVocab, IdsAreABijectionAndSaveLoadRoundTrips) {
  const auto v = build_vocab(corpus_graph({"one two three two three three", "four"}), 100, 1);
  for (TokenId id = kNumReserved; id < v.size(); ++id) EXPECT_EQ(v.id_of(v.token(id)), id);
  for (TokenId id = 0; id < kNumReserved; ++id) EXPECT_EQ(v.id_of(v.token(id)), kUnkId);
  const auto dir = heterformer::testing::scratch_dir("vocab");
  v.save(dir + "/vocab.txt");
  const auto back = Vocabulary::load(dir + "/vocab.txt");
  EXPECT_EQ(back.tokens(), v.tokens());
}

TEST(BuildVocab, SyntheticOutOfVocabularyRateMatchesCountingOracle) {
  synth::SynthConfig cfg;
  cfg.text_rich_count = 300;
  for (auto& t : cfg.textless) t.count = 10;
  const auto net = synth::generate(cfg);
  const std::size_t max_size = 120;
  const auto v = build_vocab(net.graph, max_size, 1);

  // Oracle: independent frequency table and ranking.
  std::map<std::string, long long> freq;
  long long total = 0;
  for (const auto& n : net.graph.nodes()) {
    if (!n.text) continue;
    std::istringstream ws(*n.text);
    std::string w;
    while (ws >> w) {
      ++freq[w];
      ++total;
    }
  }
  std::vector<std::pair<long long, std::string>> ranked;
  for (const auto& [w, c] : freq) ranked.emplace_back(-c, w);
  std::sort(ranked.begin(), ranked.end());
  long long kept = 0;
  for (std::size_t i = 0; i < std::min(max_size, ranked.size()); ++i) kept -= ranked[i].first;
  const double oracle = double(total - kept) / double(total);

  long long unk = 0, seen = 0;
  for (const auto& n : net.graph.nodes()) {
    if (!n.text) continue;
    const auto seq = encode_text(*n.text, v, 1000);
    for (std::size_t i = 1; i < seq.length(); ++i) {
      if (!seq.mask[i]) break;
      ++seen;
      unk += seq.ids[i] == kUnkId;
    }
  }
  EXPECT_EQ(seen, total);
  EXPECT_NEAR(double(unk) / double(seen), oracle, 1e-9);
}

TEST(EncodeText, EmptyTextIsClsThenPadding) {
  const auto v = build_vocab(corpus_graph({"a b"}), 10, 1);
  const auto seq = encode_text("", v, 4);
  EXPECT_EQ(seq.ids, (std::vector<TokenId>{kClsId, kPadId, kPadId, kPadId}));
  EXPECT_EQ(seq.mask, (std::vector<std::uint8_t>{1, 0, 0, 0}));
}

TEST(EncodeText, ExactFitAndTruncation) {
  const auto v = build_vocab(corpus_graph({"a b c"}), 10, 1);
  const auto fit = encode_text("a b c", v, 4);
  EXPECT_EQ(fit.real_length(), 4u);
  const auto cut = encode_text("a b c a b c a b", v, 4);
  EXPECT_EQ(cut.real_length(), 4u);
  EXPECT_EQ(cut.ids[1], v.id_of("a"));
  EXPECT_EQ(cut.ids[3], v.id_of("c"));
}

TEST(EncodeText, UnknownsAndLiteralMarkersBecomeUnk) {
  const auto v = build_vocab(corpus_graph({"a"}), 10, 1);
  const auto seq = encode_text("a zzz [PAD]", v, 6);
  EXPECT_EQ(seq.ids[1], v.id_of("a"));
  EXPECT_EQ(seq.ids[2], kUnkId);
  EXPECT_EQ(seq.ids[3], kUnkId);
  EXPECT_EQ(seq.mask[3], 1);
}

TEST(EncodeText, IdempotentOnDetokenizedOutput) {
  const auto v = build_vocab(corpus_graph({"graph neural text mining network"}), 3, 1);
  for (const std::string text : {"Graph, neural; unknown words here!", "", "text text text text text text text"}) {
    const auto once = encode_text(text, v, 6);
    const auto twice = encode_text(detokenize(once, v), v, 6);
    EXPECT_EQ(once.ids, twice.ids);
    EXPECT_EQ(once.mask, twice.mask);
  }
}

TEST(EmbedSequence, ZeroTokenTableGivesPositionRows) {
  std::mt19937_64 rng(1);
  const auto pos = heterformer::testing::random_tensor({4, 3}, rng);
  const auto seq = TokenSequence{{0, 5, 2, 1}, {1, 1, 1, 0}};
  const auto h = embed_sequence(seq, Tensor::zeros({6, 3}), pos);
  EXPECT_EQ(h.values(), pos.values());
}

TEST(EmbedSequence, MatchesDirectIndexingAndIsDeterministic) {
  std::mt19937_64 rng(2);
  const auto tok = heterformer::testing::random_tensor({7, 3}, rng);
  const auto pos = heterformer::testing::random_tensor({4, 3}, rng);
  const auto seq = TokenSequence{{0, 6, 3, 1}, {1, 1, 1, 0}};
  const auto h = embed_sequence(seq, tok, pos);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(h.at(i, j), tok.at(seq.ids[i], j) + pos.at(i, j));
  EXPECT_EQ(embed_sequence(seq, tok, pos).values(), h.values());
}

TEST(EmbedSequence, GradientReachesBothTables) {
  std::mt19937_64 rng(3);
  auto tok = heterformer::testing::tracked(heterformer::testing::random_tensor({5, 2}, rng));
  auto pos = heterformer::testing::tracked(heterformer::testing::random_tensor({3, 2}, rng));
  const auto seq = TokenSequence{{0, 4, 4}, {1, 1, 1}};
  numcore::Tape tape;
  Tensor loss;
  {
    numcore::TapeScope scope(tape);
    loss = numcore::sum(embed_sequence(seq, tok, pos));
  }
  tape.backward(loss);
  EXPECT_EQ(tok.grad(), (std::vector<double>{1, 1, 0, 0, 0, 0, 0, 0, 2, 2}));
  EXPECT_EQ(pos.grad(), (std::vector<double>(6, 1.0)));
}

TEST(EmbedSequence, OutOfRangeIdIsAnError) {
  const auto seq = TokenSequence{{0, 9}, {1, 1}};
  EXPECT_THROW(embed_sequence(seq, Tensor::zeros({5, 2}), Tensor::zeros({2, 2})), DimensionError);
}
