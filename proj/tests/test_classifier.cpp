#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <gtest/gtest.h>

#include "geoprobe/classifier.hpp"
#include "geoprobe/reference_classifier.hpp"
#include "geoprobe/synthetic.hpp"
#include "geoprobe/tokenizer.hpp"
#include "support/errors.hpp"
#include "support/finite_difference.hpp"
#include "support/generators.hpp"

namespace geoprobe {
namespace {

using testing::code_of;

std::shared_ptr<const ReferenceClassifier> tiny_model(std::uint64_t seed, std::vector<std::string> tokens,
                                                      std::size_t dim = 4, std::size_t hidden = 4,
                                                      std::size_t labels = 2) {
  Rng rng(seed);
  return testing::random_reference(rng, tokens, dim, hidden, labels);
}

// --- tokenizer -------------------------------------------------------------

TEST(Vocabulary, UnknownIsIdZero) {
  Vocabulary v({"good", "[UNK]", "movie"});
  EXPECT_EQ(v.token(0), "[UNK]");
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.id_of("good"), 1);
  EXPECT_EQ(v.id_of("bad"), -1);
}

TEST(Vocabulary, GreedyLongestMatch) {
  Vocabulary v({"un", "believ", "able", "u", "n", "unbe"});
  // "unbe" wins over "un" at position 0, then "liev" is not coverable.
  EXPECT_EQ(v.encode_word("unbelievable"), (std::vector<int>{0}));
  Vocabulary w({"un", "believ", "able"});
  EXPECT_EQ(w.encode_word("unbelievable"),
            (std::vector<int>{w.id_of("un"), w.id_of("believ"), w.id_of("able")}));
  EXPECT_EQ(w.encode_word("unable"), (std::vector<int>{w.id_of("un"), w.id_of("able")}));
  EXPECT_EQ(w.encode_word("xyz"), (std::vector<int>{0}));
  EXPECT_EQ(w.encode_word("[UNK]"), (std::vector<int>{0}));
}

// Oracle: at each position the chosen piece is the longest vocabulary entry
// that is a prefix of the remainder, and the pieces spell the word.
TEST(Vocabulary, SegmentationMatchesOracleOnRandomVocabularies) {
  Rng rng(5);
  const std::string alphabet = "abc";
  auto random_string = [&](std::size_t max_len) {
    std::string s;
    for (std::size_t n = 1 + rng.below(max_len); n > 0; --n) s += alphabet[rng.below(alphabet.size())];
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> pieces;
    std::unordered_set<std::string> seen;
    for (std::size_t n = 1 + rng.below(12); n > 0; --n) {
      auto p = random_string(4);
      if (seen.insert(p).second) pieces.push_back(p);
    }
    Vocabulary vocab(pieces);
    const std::string word = random_string(10);
    auto ids = vocab.encode_word(word);
    ASSERT_FALSE(ids.empty());
    if (ids == std::vector<int>{0}) {
      // Greedy must really get stuck somewhere.
      std::size_t pos = 0;
      bool stuck = false;
      while (pos < word.size() && !stuck) {
        std::size_t best = 0;
        for (const auto& p : pieces)
          if (word.compare(pos, p.size(), p) == 0 && p.size() > best) best = p.size();
        if (best == 0) stuck = true;
        pos += best;
      }
      EXPECT_TRUE(stuck) << word;
      continue;
    }
    std::size_t pos = 0;
    for (int id : ids) {
      const std::string& piece = vocab.token(static_cast<std::size_t>(id));
      ASSERT_EQ(word.compare(pos, piece.size(), piece), 0);
      for (const auto& p : pieces) {
        if (word.compare(pos, p.size(), p) == 0) EXPECT_LE(p.size(), piece.size());
      }
      pos += piece.size();
    }
    EXPECT_EQ(pos, word.size());
  }
}

TEST(SplitWords, CollapsesWhitespace) {
  EXPECT_EQ(split_words("  a \t b\nc  "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_words(" \t ").empty());
  EXPECT_EQ(join_words({"a", "b"}), "a b");
}

TEST(Tokenize, WordLevel) {
  ReferenceSession s(tiny_model(1, {"good", "movie"}));
  auto in = s.tokenize("", "good movie");
  EXPECT_EQ(in.words, (std::vector<std::string>{"good", "movie"}));
  EXPECT_EQ(in.token_ids, (std::vector<int>{1, 2}));
  EXPECT_EQ(in.spans, (std::vector<TokenSpan>{{0, 1}, {1, 2}}));
  EXPECT_TRUE(in.prompt_ids.empty());
}

TEST(Tokenize, SubWordSpan) {
  ReferenceSession s(tiny_model(1, {"un", "believ", "able"}));
  auto in = s.tokenize("", "unbelievable");
  ASSERT_EQ(in.words.size(), 1u);
  EXPECT_EQ(in.spans, (std::vector<TokenSpan>{{0, 3}}));
  EXPECT_EQ(in.token_ids, (std::vector<int>{1, 2, 3}));
}

TEST(Tokenize, PromptCarriedSeparately) {
  ReferenceSession s(tiny_model(1, {"rate", "this", "good"}));
  auto in = s.tokenize("rate this", "good oops");
  EXPECT_EQ(in.prompt_ids, (std::vector<int>{1, 2}));
  EXPECT_EQ(in.token_ids, (std::vector<int>{3, 0}));
  EXPECT_EQ(in.words.size(), 2u);
  EXPECT_NO_THROW(validate_spans(in));
}

TEST(Tokenize, EmptyText) {
  ReferenceSession s(tiny_model(1, {"a"}));
  EXPECT_EQ(code_of([&] { s.tokenize("p", ""); }), ErrorCode::EmptyText);
  EXPECT_EQ(code_of([&] { s.tokenize("p", "  \t"); }), ErrorCode::EmptyText);
}

TEST(ValidateSpans, RejectsGapsOverlapsAndCountMismatch) {
  TokenizedInput in;
  in.words = {"a", "b"};
  in.token_ids = {1, 2, 3};
  in.spans = {{0, 1}, {1, 3}};
  EXPECT_NO_THROW(validate_spans(in));
  in.spans = {{0, 1}, {2, 3}};
  EXPECT_EQ(code_of([&] { validate_spans(in); }), ErrorCode::ProtocolError);
  in.spans = {{0, 2}, {1, 3}};
  EXPECT_EQ(code_of([&] { validate_spans(in); }), ErrorCode::ProtocolError);
  in.spans = {{0, 3}};
  EXPECT_EQ(code_of([&] { validate_spans(in); }), ErrorCode::ProtocolError);
  in.spans = {{0, 1}, {1, 2}};
  EXPECT_EQ(code_of([&] { validate_spans(in); }), ErrorCode::ProtocolError);
  in.spans = {{0, 0}, {0, 3}};
  EXPECT_EQ(code_of([&] { validate_spans(in); }), ErrorCode::ProtocolError);
}

// --- forward ---------------------------------------------------------------

TEST(Forward, ZeroOutputWeightsGiveUniformSoftmax) {
  Rng rng(2);
  auto p = testing::random_params(rng, {"a", "b", "c"}, 4, 4, 2);
  std::fill(p.output_weights.begin(), p.output_weights.end(), 0.0);
  std::fill(p.output_bias.begin(), p.output_bias.end(), 0.0);
  ReferenceSession s(std::make_shared<const ReferenceClassifier>(p));
  auto out = s.forward(s.tokenize("", "a b c"), 1);
  EXPECT_EQ(out.logits, (Vector{0.0, 0.0}));
  EXPECT_NEAR(out.loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(out.loss, 0.6931, 1e-4);
  EXPECT_EQ(out.predicted, 0u);
}

TEST(Forward, LabelOutOfRange) {
  ReferenceSession s(tiny_model(3, {"a"}));
  auto in = s.tokenize("", "a");
  EXPECT_EQ(code_of([&] { s.forward(in, 5); }), ErrorCode::LabelOutOfRange);
  EXPECT_EQ(code_of([&] { s.grad_wrt_embeddings(in, 2); }), ErrorCode::LabelOutOfRange);
}

// Straight-line reimplementation for a vocab-10, dim-4, hidden-4 model.
TEST(Forward, MatchesHandRolledOracle) {
  std::vector<std::string> words;
  for (int i = 0; i < 9; ++i) words.push_back("w" + std::to_string(i));
  auto model = tiny_model(42, words, 4, 4, 2);
  const auto& p = model->params();
  ASSERT_EQ(p.vocab.size(), 10u);
  ReferenceSession s(model);
  auto in = s.tokenize("", "w3 w7 w3");
  const int ids[3] = {4, 8, 4};
  double pooled[4] = {0, 0, 0, 0};
  for (int id : ids)
    for (int d = 0; d < 4; ++d) pooled[d] += p.embeddings[id * 4 + d] / 3.0;
  double hidden[4];
  for (int h = 0; h < 4; ++h) {
    double a = p.hidden_bias[h];
    for (int d = 0; d < 4; ++d) a += p.hidden_weights[h * 4 + d] * pooled[d];
    hidden[h] = std::tanh(a);
  }
  double z[2];
  for (int c = 0; c < 2; ++c) {
    z[c] = p.output_bias[c];
    for (int h = 0; h < 4; ++h) z[c] += p.output_weights[c * 4 + h] * hidden[h];
  }
  const double m = std::max(z[0], z[1]);
  const double loss1 = -(z[1] - m - std::log(std::exp(z[0] - m) + std::exp(z[1] - m)));
  auto out = s.forward(in, 1);
  EXPECT_NEAR(out.logits[0], z[0], 1e-12);
  EXPECT_NEAR(out.logits[1], z[1], 1e-12);
  EXPECT_NEAR(out.loss, loss1, 1e-9);
  EXPECT_EQ(out.predicted, z[1] > z[0] ? 1u : 0u);
}

TEST(Forward, LossIsCrossEntropyOfLogits) {
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    auto model = testing::random_reference(rng, {"a", "b", "c", "d"}, 3, 5, 2 + rng.below(4), 3.0);
    ReferenceSession s(model);
    auto in = s.tokenize("a", "b c d a");
    const auto label = rng.below(model->label_count());
    auto out = s.forward(in, label);
    const double lse = log_sum_exp(out.logits);
    EXPECT_NEAR(out.loss, lse - out.logits[label], 1e-9);
    EXPECT_GE(out.loss, 0.0);
    EXPECT_EQ(out.predicted, argmax(out.logits));
  }
}

TEST(CrossEntropy, StableForLargeLogits) {
  EXPECT_NEAR(cross_entropy(Vector{1000.0, 0.0}, 0), 0.0, 1e-12);
  EXPECT_NEAR(cross_entropy(Vector{1000.0, 0.0}, 1), 1000.0, 1e-9);
  EXPECT_EQ(code_of([] { cross_entropy(Vector{1.0, 2.0}, 2); }), ErrorCode::LabelOutOfRange);
}

// --- gradient ----------------------------------------------------------------

TEST(Gradient, ZeroHiddenWeightsGiveZeroGradient) {
  Rng rng(4);
  auto p = testing::random_params(rng, {"a", "b", "c"}, 4, 4, 2);
  std::fill(p.hidden_weights.begin(), p.hidden_weights.end(), 0.0);
  ReferenceSession s(std::make_shared<const ReferenceClassifier>(p));
  auto g = s.grad_wrt_embeddings(s.tokenize("a", "b c"), 0);
  for (const auto& row : g.per_token)
    for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, ShapeMatchesTextTokens) {
  auto model = tiny_model(6, testing::numbered_words(9, "t"), 5, 3, 3);
  ReferenceSession s(model);
  auto in = s.tokenize("t8 t7", "t1 t2 t3 t4 t5 t6 t0");
  auto g = s.grad_wrt_embeddings(in, 2);
  ASSERT_EQ(g.per_token.size(), 7u);
  for (const auto& row : g.per_token) EXPECT_EQ(row.size(), 5u);
  // Prompt rows are dropped: the text rows equal the tail of the full pass.
  std::vector<int> full = in.prompt_ids;
  full.insert(full.end(), in.token_ids.begin(), in.token_ids.end());
  auto all = model->loss_gradient(full, 2);
  ASSERT_EQ(all.per_token.size(), 9u);
  for (std::size_t t = 0; t < 7; ++t) EXPECT_EQ(g.per_token[t], all.per_token[t + 2]);
  EXPECT_EQ(g.loss, s.forward(in, 2).loss);
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = 1 + rng.below(6), hidden = 1 + rng.below(6), labels = 2 + rng.below(3);
    auto p = testing::random_params(rng, testing::numbered_words(10, "t"), dim, hidden, labels);
    std::vector<int> ids(10);
    std::iota(ids.begin(), ids.end(), 1);
    rng.shuffle(ids);
    ids.resize(1 + rng.below(6));
    auto check = testing::check_gradient(p, ids, rng.below(labels));
    EXPECT_LE(check.max_relative, 1e-6) << "trial " << trial;
  }
}

TEST(Gradient, DescentStepDoesNotIncreaseLoss) {
  Rng rng(31);
  const double alpha = 1e-4;
  for (int trial = 0; trial < 50; ++trial) {
    auto p = testing::random_params(rng, testing::numbered_words(8, "t"), 4, 6, 3);
    std::vector<int> ids = {1, 2, 3, 4, 5};
    const std::size_t label = rng.below(3);
    ReferenceClassifier model(p);
    auto g = model.loss_gradient(ids, label);
    ReferenceParams moved = p;
    for (std::size_t t = 0; t < ids.size(); ++t)
      for (std::size_t d = 0; d < p.embed_dim; ++d)
        moved.embeddings[static_cast<std::size_t>(ids[t]) * p.embed_dim + d] -= alpha * g.per_token[t][d];
    const double after = cross_entropy(ReferenceClassifier(moved).logits(ids), label);
    EXPECT_LE(after, g.loss + 1e-6);
  }
}

// --- training ------------------------------------------------------------------

TEST(Train, SeparableCorpusReachesNinetyPercent) {
  SyntheticCorpus corpus = make_synthetic_corpus(SyntheticSpec{});
  TrainConfig config;
  config.vocabulary = corpus.lexicon;
  config.prompt = corpus.manifest.prompt();
  auto model = std::make_shared<const ReferenceClassifier>(train_reference(corpus.train, config));
  ReferenceSession s(model);
  std::size_t correct = 0;
  for (const auto& sample : corpus.test) {
    correct += s.forward(s.tokenize(config.prompt, sample.text), sample.label).predicted == sample.label;
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(corpus.test.size()), 0.90);
}

TEST(Train, ZeroEpochsKeepsInitialization) {
  std::vector<LabeledText> corpus = {{"a b", 0}, {"c d", 1}};
  TrainConfig config;
  config.epochs = 0;
  auto trained = train_reference(corpus, config);
  auto init = initialize_reference(trained.vocab(), config);
  EXPECT_TRUE(trained.params() == init.params());
}

TEST(Train, BitDeterministic) {
  SyntheticSpec spec;
  spec.train_size = 300;
  spec.vocab_size = 500;
  auto corpus = make_synthetic_corpus(spec);
  TrainConfig config;
  config.epochs = 3;
  auto a = train_reference(corpus.train, config);
  auto b = train_reference(corpus.train, config);
  EXPECT_TRUE(a.params() == b.params());
  config.seed = 2;
  auto c = train_reference(corpus.train, config);
  EXPECT_FALSE(a.params() == c.params());
}

TEST(Train, Errors) {
  EXPECT_EQ(code_of([] { train_reference({}, TrainConfig{}); }), ErrorCode::EmptyCorpus);
  EXPECT_EQ(code_of([] { train_reference({{"a", 0}, {"b", 2}}, TrainConfig{}); }), ErrorCode::LabelOutOfRange);
  TrainConfig bad;
  bad.embed_dim = 0;
  EXPECT_EQ(code_of([&] { train_reference({{"a", 0}}, bad); }), ErrorCode::InvalidConfig);
}

TEST(Train, VocabularyDefaultsToPromptThenCorpusWords) {
  TrainConfig config;
  config.epochs = 0;
  config.prompt = "judge :";
  auto m = train_reference({{"b a", 0}, {"a c", 1}}, config);
  EXPECT_EQ(m.vocab().tokens(), (std::vector<std::string>{"[UNK]", "judge", ":", "b", "a", "c"}));
}

// --- checkpoint ----------------------------------------------------------------

std::string checkpoint_text(const ReferenceClassifier& m) {
  std::ostringstream out;
  write_checkpoint(m, out);
  return out.str();
}

ReferenceClassifier from_text(const std::string& text) {
  std::istringstream in(text);
  return read_checkpoint(in);
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(13);
  auto model = testing::random_reference(rng, {"un", "believ", "able", "x"}, 3, 5, 4);
  const std::string text = checkpoint_text(*model);
  EXPECT_EQ(text.substr(0, text.find('\n')), "GEOPROBE-REF v1 vocab=5 dim=3 hidden=5 labels=4");
  auto back = from_text(text);
  EXPECT_TRUE(back.params() == model->params());
  EXPECT_EQ(checkpoint_text(back), text);
}

TEST(Checkpoint, RejectsDamage) {
  Rng rng(14);
  auto model = testing::random_reference(rng, {"a", "b"}, 2, 2, 2);
  const std::string text = checkpoint_text(*model);
  EXPECT_EQ(code_of([&] { from_text(""); }), ErrorCode::MalformedCheckpoint);
  EXPECT_EQ(code_of([&] { from_text("GEOPROBE-REF v2" + text.substr(text.find(" vocab"))); }),
            ErrorCode::MalformedCheckpoint);
  const std::string without_last_line = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  EXPECT_EQ(code_of([&] { from_text(without_last_line); }), ErrorCode::MalformedCheckpoint);
  EXPECT_EQ(code_of([&] { from_text(text + "1\n"); }), ErrorCode::MalformedCheckpoint);
  std::string swapped = text;
  swapped.replace(swapped.find("[UNK]"), 5, "[UNX]");
  EXPECT_EQ(code_of([&] { from_text(swapped); }), ErrorCode::MalformedCheckpoint);
  const std::string non_finite = without_last_line + "nan 0\n";
  EXPECT_EQ(code_of([&] { from_text(non_finite); }), ErrorCode::MalformedCheckpoint);
}

TEST(Checkpoint, ShapeValidation) {
  Rng rng(15);
  auto p = testing::random_params(rng, {"a"}, 2, 2, 2);
  p.output_bias.push_back(0.0);
  EXPECT_EQ(code_of([&] { ReferenceClassifier m(p); }), ErrorCode::MalformedCheckpoint);
  p.output_bias.pop_back();
  p.hidden_bias[0] = std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of([&] { ReferenceClassifier m(p); }), ErrorCode::MalformedCheckpoint);
}

// --- session -------------------------------------------------------------------

TEST(ReferenceSessionTest, ClosedSessionRefusesWork) {
  ReferenceSession s(tiny_model(9, {"a"}));
  auto in = s.tokenize("", "a");
  s.close();
  EXPECT_EQ(code_of([&] { s.forward(in, 0); }), ErrorCode::SessionClosed);
  EXPECT_EQ(code_of([&] { s.tokenize("", "a"); }), ErrorCode::SessionClosed);
  EXPECT_EQ(code_of([&] { s.grad_wrt_embeddings(in, 0); }), ErrorCode::SessionClosed);
}

TEST(ReferenceSessionTest, ExportIsTheEmbeddingTable) {
  auto model = tiny_model(10, {"a", "b"}, 3, 2, 2);
  ReferenceSession s(model);
  auto caps = s.capabilities();
  EXPECT_TRUE(caps.forward && caps.grad && caps.embedding_table_export);
  auto table = s.export_embeddings();
  ASSERT_EQ(table.size(), 3u);
  EXPECT_EQ(table.word(0), "[UNK]");
  for (std::size_t r = 0; r < 3; ++r) {
    auto e = model->embedding(static_cast<int>(r));
    EXPECT_EQ(Vector(table.vector(r).begin(), table.vector(r).end()), Vector(e.begin(), e.end()));
  }
}

TEST(Retokenize, SwapsWordsAndKeepsPrompt) {
  ReferenceSession s(tiny_model(11, {"p", "a", "b", "c"}));
  auto in = s.tokenize("p", "a b");
  auto next = retokenize(s, in, {"a", "c"});
  EXPECT_EQ(next.prompt_ids, in.prompt_ids);
  EXPECT_EQ(next.words, (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(next.token_ids, (std::vector<int>{2, 4}));
}

}  // namespace
}  // namespace geoprobe
