#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "geoprobe/classifier.hpp"
#include "geoprobe/tokenizer.hpp"

namespace geoprobe {

/// Parameter blocks of the reference classifier, all row-major:
/// embeddings V x D, hidden_weights H x D, output_weights C x H.
struct ReferenceParams {
  Vocabulary vocab;
  std::size_t embed_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t label_count = 0;
  std::vector<double> embeddings;
  std::vector<double> hidden_weights;
  std::vector<double> hidden_bias;
  std::vector<double> output_weights;
  std::vector<double> output_bias;

  bool operator==(const ReferenceParams& other) const;
};

/// Mean-pool over token embeddings -> tanh hidden layer -> linear logits.
/// Immutable once constructed; one instance may back many sessions.
class ReferenceClassifier {
 public:
  /// Validates shapes and finiteness; throws MalformedCheckpoint.
  explicit ReferenceClassifier(ReferenceParams params);

  const ReferenceParams& params() const noexcept { return params_; }
  const Vocabulary& vocab() const noexcept { return params_.vocab; }
  std::size_t embed_dim() const noexcept { return params_.embed_dim; }
  std::size_t hidden_dim() const noexcept { return params_.hidden_dim; }
  std::size_t label_count() const noexcept { return params_.label_count; }

  std::span<const double> embedding(int token_id) const;

  /// Logits for a full token sequence (prompt ids followed by text ids).
  Vector logits(std::span<const int> ids) const;

  /// Loss, logits, and d loss / d embedding for every position in `ids`.
  EmbeddingGradient loss_gradient(std::span<const int> ids, std::size_t label) const;

  EmbeddingTable embedding_table() const;

 private:
  ReferenceParams params_;
};

struct LabeledText {
  std::string text;
  std::size_t label = 0;
};

struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t label_count = 2;
  std::size_t embed_dim = 6;
  std::size_t hidden_dim = 16;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.5;
  double embedding_init = 0.5;  // uniform(-a, a)
  std::string prompt;
  // Token list; empty means "every distinct word of the corpus, first-seen order".
  std::vector<std::string> vocabulary;
};

/// Seeded initialization used by train_reference before the first step.
ReferenceClassifier initialize_reference(const Vocabulary& vocab, const TrainConfig& config);

/// Minibatch gradient descent on cross-entropy, bit-deterministic per seed.
/// Throws EmptyCorpus or LabelOutOfRange.
ReferenceClassifier train_reference(const std::vector<LabeledText>& corpus,
                                    const TrainConfig& config);

void write_checkpoint(const ReferenceClassifier& model, std::ostream& out);
ReferenceClassifier read_checkpoint(std::istream& in);
void save_checkpoint(const ReferenceClassifier& model, const std::filesystem::path& path);
ReferenceClassifier load_checkpoint(const std::filesystem::path& path);

/// In-process session over a shared reference classifier.
class ReferenceSession : public ModelSession {
 public:
  explicit ReferenceSession(std::shared_ptr<const ReferenceClassifier> model);

  std::size_t label_count() const override { return model_->label_count(); }
  std::size_t embed_dim() const override { return model_->embed_dim(); }
  Capabilities capabilities() const override { return {true, true, true}; }

  TokenizedInput tokenize(std::string_view prompt, std::string_view text) override;
  ForwardOutput forward(const TokenizedInput& input, std::size_t label) override;
  EmbeddingGradient grad_wrt_embeddings(const TokenizedInput& input,
                                        std::size_t label) override;
  EmbeddingTable export_embeddings() override;
  void close() override { closed_ = true; }

 private:
  void ensure_open() const;
  std::vector<int> full_sequence(const TokenizedInput& input) const;

  std::shared_ptr<const ReferenceClassifier> model_;
  bool closed_ = false;
};

}  // namespace geoprobe
