#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "geoprobe/embedding_store.hpp"
#include "geoprobe/numeric.hpp"

namespace geoprobe {

/// Half-open range of token positions belonging to one word.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const TokenSpan&) const = default;
};

/// One sentence ready for the model. `token_ids` covers only the attackable
/// text; the task prompt is encoded separately in `prompt_ids` and is fed to
/// the model ahead of the text, never attacked.
struct TokenizedInput {
  std::vector<std::string> words;
  std::string prompt;
  std::vector<int> prompt_ids;
  std::vector<int> token_ids;
  std::vector<TokenSpan> spans;

  std::size_t word_count() const noexcept { return words.size(); }
};

/// Throws ProtocolError unless spans partition [0, token_ids.size()) in order
/// with one span per word.
void validate_spans(const TokenizedInput& input);

struct Capabilities {
  bool forward = true;
  bool grad = false;
  bool embedding_table_export = false;
};

struct ForwardOutput {
  Vector logits;
  double loss = 0.0;
  std::size_t predicted = 0;
};

struct EmbeddingGradient {
  std::vector<Vector> per_token;  // one row per entry of token_ids
  double loss = 0.0;
  Vector logits;
};

/// -log softmax(logits)[label].
double cross_entropy(std::span<const double> logits, std::size_t label);

/// Gradient-capable text classifier. A session is a serial resource; open one
/// per worker for parallel use.
class ModelSession {
 public:
  virtual ~ModelSession() = default;

  virtual std::size_t label_count() const = 0;
  virtual std::size_t embed_dim() const = 0;
  virtual Capabilities capabilities() const = 0;

  /// Throws EmptyText when `text` has no words.
  virtual TokenizedInput tokenize(std::string_view prompt, std::string_view text) = 0;
  virtual ForwardOutput forward(const TokenizedInput& input, std::size_t label) = 0;
  /// Gradient of the cross-entropy at `label` w.r.t. each text-token embedding.
  virtual EmbeddingGradient grad_wrt_embeddings(const TokenizedInput& input,
                                                std::size_t label) = 0;
  /// The model's input-embedding table, one row per vocabulary token.
  virtual EmbeddingTable export_embeddings() = 0;

  virtual void close() = 0;
};

/// Re-tokenizes `input` with `words` swapped in, keeping the prompt.
TokenizedInput retokenize(ModelSession& session, const TokenizedInput& input,
                          const std::vector<std::string>& words);

}  // namespace geoprobe
