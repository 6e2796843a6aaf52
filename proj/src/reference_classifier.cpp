#include "geoprobe/reference_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "geoprobe/error.hpp"
#include "geoprobe/rng.hpp"

namespace geoprobe {
namespace {

struct Activations {
  Vector pooled;  // D
  Vector hidden;  // H, post-tanh
  Vector logits;  // C
};

Activations run_forward(const ReferenceParams& p, std::span<const int> ids) {
  const std::size_t D = p.embed_dim, H = p.hidden_dim, C = p.label_count;
  Activations act{Vector(D, 0.0), Vector(H, 0.0), Vector(C, 0.0)};
  for (int id : ids) {
    const double* row = p.embeddings.data() + static_cast<std::size_t>(id) * D;
    for (std::size_t d = 0; d < D; ++d) act.pooled[d] += row[d];
  }
  const double inv_n = 1.0 / static_cast<double>(ids.size());
  for (double& v : act.pooled) v *= inv_n;
  for (std::size_t h = 0; h < H; ++h) {
    double a = p.hidden_bias[h];
    const double* w = p.hidden_weights.data() + h * D;
    for (std::size_t d = 0; d < D; ++d) a += w[d] * act.pooled[d];
    act.hidden[h] = std::tanh(a);
  }
  for (std::size_t c = 0; c < C; ++c) {
    double z = p.output_bias[c];
    const double* w = p.output_weights.data() + c * H;
    for (std::size_t h = 0; h < H; ++h) z += w[h] * act.hidden[h];
    act.logits[c] = z;
  }
  return act;
}

struct Backward {
  Vector d_logits;  // C
  Vector d_pre;     // H, gradient at the tanh input
  Vector d_pooled;  // D
};

Backward run_backward(const ReferenceParams& p, const Activations& act, std::size_t label) {
  const std::size_t D = p.embed_dim, H = p.hidden_dim, C = p.label_count;
  Backward g{Vector(C), Vector(H, 0.0), Vector(D, 0.0)};
  const double lse = log_sum_exp(act.logits);
  for (std::size_t c = 0; c < C; ++c) {
    g.d_logits[c] = std::exp(act.logits[c] - lse) - (c == label ? 1.0 : 0.0);
  }
  for (std::size_t h = 0; h < H; ++h) {
    double dh = 0.0;
    for (std::size_t c = 0; c < C; ++c) dh += p.output_weights[c * H + h] * g.d_logits[c];
    g.d_pre[h] = dh * (1.0 - act.hidden[h] * act.hidden[h]);
  }
  for (std::size_t h = 0; h < H; ++h) {
    const double* w = p.hidden_weights.data() + h * D;
    for (std::size_t d = 0; d < D; ++d) g.d_pooled[d] += w[d] * g.d_pre[h];
  }
  return g;
}

void check_finite(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::MalformedCheckpoint, std::string(what) + " has non-finite values");
  }
}

void check_size(const std::vector<double>& values, std::size_t expected, const char* what) {
  if (values.size() != expected) {
    throw Error(ErrorCode::MalformedCheckpoint,
                std::string(what) + " has " + std::to_string(values.size()) +
                    " values, expected " + std::to_string(expected));
  }
}

void fill_uniform(Rng& rng, std::vector<double>& values, double bound) {
  for (double& v : values) v = rng.uniform(-bound, bound);
}

}  // namespace

bool ReferenceParams::operator==(const ReferenceParams& other) const {
  return vocab.tokens() == other.vocab.tokens() && embed_dim == other.embed_dim &&
         hidden_dim == other.hidden_dim && label_count == other.label_count &&
         embeddings == other.embeddings && hidden_weights == other.hidden_weights &&
         hidden_bias == other.hidden_bias && output_weights == other.output_weights &&
         output_bias == other.output_bias;
}

ReferenceClassifier::ReferenceClassifier(ReferenceParams params) : params_(std::move(params)) {
  const auto& p = params_;
  if (p.embed_dim == 0 || p.hidden_dim == 0 || p.label_count < 2) {
    throw Error(ErrorCode::MalformedCheckpoint, "dim and hidden must be positive, labels >= 2");
  }
  check_size(p.embeddings, p.vocab.size() * p.embed_dim, "embeddings");
  check_size(p.hidden_weights, p.hidden_dim * p.embed_dim, "hidden weights");
  check_size(p.hidden_bias, p.hidden_dim, "hidden bias");
  check_size(p.output_weights, p.label_count * p.hidden_dim, "output weights");
  check_size(p.output_bias, p.label_count, "output bias");
  check_finite(p.embeddings, "embeddings");
  check_finite(p.hidden_weights, "hidden weights");
  check_finite(p.hidden_bias, "hidden bias");
  check_finite(p.output_weights, "output weights");
  check_finite(p.output_bias, "output bias");
}

std::span<const double> ReferenceClassifier::embedding(int token_id) const {
  if (token_id < 0 || static_cast<std::size_t>(token_id) >= params_.vocab.size()) {
    throw std::out_of_range("token id " + std::to_string(token_id));
  }
  return {params_.embeddings.data() + static_cast<std::size_t>(token_id) * params_.embed_dim,
          params_.embed_dim};
}

Vector ReferenceClassifier::logits(std::span<const int> ids) const {
  return run_forward(params_, ids).logits;
}

EmbeddingGradient ReferenceClassifier::loss_gradient(std::span<const int> ids,
                                                     std::size_t label) const {
  if (label >= params_.label_count) {
    throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
  }
  Activations act = run_forward(params_, ids);
  Backward back = run_backward(params_, act, label);
  // Mean pooling: every position receives d_pooled / n.
  const double inv_n = 1.0 / static_cast<double>(ids.size());
  Vector per_position(params_.embed_dim);
  for (std::size_t d = 0; d < per_position.size(); ++d) per_position[d] = back.d_pooled[d] * inv_n;
  EmbeddingGradient out;
  out.per_token.assign(ids.size(), per_position);
  out.loss = cross_entropy(act.logits, label);
  out.logits = std::move(act.logits);
  return out;
}

EmbeddingTable ReferenceClassifier::embedding_table() const {
  std::vector<Vector> rows;
  rows.reserve(params_.vocab.size());
  for (std::size_t i = 0; i < params_.vocab.size(); ++i) {
    auto e = embedding(static_cast<int>(i));
    rows.emplace_back(e.begin(), e.end());
  }
  return EmbeddingTable(params_.embed_dim, params_.vocab.tokens(), rows);
}

ReferenceClassifier initialize_reference(const Vocabulary& vocab, const TrainConfig& config) {
  if (config.embed_dim == 0 || config.hidden_dim == 0 || config.label_count < 2) {
    throw Error(ErrorCode::InvalidConfig, "embed_dim, hidden_dim must be positive, label_count >= 2");
  }
  Rng rng(config.seed);
  ReferenceParams p;
  p.vocab = vocab;
  p.embed_dim = config.embed_dim;
  p.hidden_dim = config.hidden_dim;
  p.label_count = config.label_count;
  p.embeddings.resize(vocab.size() * config.embed_dim);
  p.hidden_weights.resize(config.hidden_dim * config.embed_dim);
  p.hidden_bias.assign(config.hidden_dim, 0.0);
  p.output_weights.resize(config.label_count * config.hidden_dim);
  p.output_bias.assign(config.label_count, 0.0);
  fill_uniform(rng, p.embeddings, config.embedding_init);
  fill_uniform(rng, p.hidden_weights, 1.0 / std::sqrt(static_cast<double>(config.embed_dim)));
  fill_uniform(rng, p.output_weights, 1.0 / std::sqrt(static_cast<double>(config.hidden_dim)));
  return ReferenceClassifier(std::move(p));
}

ReferenceClassifier train_reference(const std::vector<LabeledText>& corpus,
                                    const TrainConfig& config) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "no training samples");
  if (config.batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch_size must be positive");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].label >= config.label_count) {
      throw Error(ErrorCode::LabelOutOfRange, "sample " + std::to_string(i) + " label " +
                                                  std::to_string(corpus[i].label));
    }
  }

  std::vector<std::string> tokens;
  std::unordered_set<std::string> seen;
  auto add = [&](const std::string& w) {
    if (seen.insert(w).second) tokens.push_back(w);
  };
  for (const auto& w : config.vocabulary) add(w);
  for (const auto& w : split_words(config.prompt)) add(w);
  if (config.vocabulary.empty()) {
    for (const auto& s : corpus)
      for (const auto& w : split_words(s.text)) add(w);
  }
  const Vocabulary vocab(tokens);
  ReferenceClassifier init = initialize_reference(vocab, config);
  ReferenceParams p = init.params();

  std::vector<int> prompt_ids;
  for (const auto& w : split_words(config.prompt)) {
    auto ids = vocab.encode_word(w);
    prompt_ids.insert(prompt_ids.end(), ids.begin(), ids.end());
  }
  std::vector<std::vector<int>> sequences;
  sequences.reserve(corpus.size());
  for (const auto& s : corpus) {
    std::vector<int> seq = prompt_ids;
    for (const auto& w : split_words(s.text)) {
      auto ids = vocab.encode_word(w);
      seq.insert(seq.end(), ids.begin(), ids.end());
    }
    if (seq.empty()) seq.push_back(vocab.unknown_id());
    sequences.push_back(std::move(seq));
  }

  const std::size_t D = p.embed_dim, H = p.hidden_dim, C = p.label_count;
  Rng order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> gE(p.embeddings.size(), 0.0);
  std::vector<double> gW1(p.hidden_weights.size()), gb1(H), gW2(p.output_weights.size()), gb2(C);
  std::vector<int> touched;
  std::vector<char> is_touched(vocab.size(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::fill(gW1.begin(), gW1.end(), 0.0);
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gW2.begin(), gW2.end(), 0.0);
      std::fill(gb2.begin(), gb2.end(), 0.0);
      for (int id : touched) {
        std::fill_n(gE.begin() + static_cast<std::ptrdiff_t>(id) * D, D, 0.0);
        is_touched[id] = 0;
      }
      touched.clear();

      for (std::size_t b = start; b < stop; ++b) {
        const auto& seq = sequences[order[b]];
        const std::size_t label = corpus[order[b]].label;
        Activations act = run_forward(p, seq);
        Backward back = run_backward(p, act, label);
        for (std::size_t c = 0; c < C; ++c) {
          gb2[c] += back.d_logits[c];
          for (std::size_t h = 0; h < H; ++h) gW2[c * H + h] += back.d_logits[c] * act.hidden[h];
        }
        for (std::size_t h = 0; h < H; ++h) {
          gb1[h] += back.d_pre[h];
          for (std::size_t d = 0; d < D; ++d) gW1[h * D + d] += back.d_pre[h] * act.pooled[d];
        }
        const double inv_n = 1.0 / static_cast<double>(seq.size());
        for (int id : seq) {
          if (!is_touched[id]) {
            is_touched[id] = 1;
            touched.push_back(id);
          }
          double* g = gE.data() + static_cast<std::size_t>(id) * D;
          for (std::size_t d = 0; d < D; ++d) g[d] += back.d_pooled[d] * inv_n;
        }
      }

      const double step = config.learning_rate / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < gW1.size(); ++i) p.hidden_weights[i] -= step * gW1[i];
      for (std::size_t i = 0; i < H; ++i) p.hidden_bias[i] -= step * gb1[i];
      for (std::size_t i = 0; i < gW2.size(); ++i) p.output_weights[i] -= step * gW2[i];
      for (std::size_t i = 0; i < C; ++i) p.output_bias[i] -= step * gb2[i];
      for (int id : touched) {
        const std::size_t base = static_cast<std::size_t>(id) * D;
        for (std::size_t d = 0; d < D; ++d) p.embeddings[base + d] -= step * gE[base + d];
      }
    }
  }
  return ReferenceClassifier(std::move(p));
}

void write_checkpoint(const ReferenceClassifier& model, std::ostream& out) {
  const auto& p = model.params();
  out << "GEOPROBE-REF v1 vocab=" << p.vocab.size() << " dim=" << p.embed_dim
      << " hidden=" << p.hidden_dim << " labels=" << p.label_count << '\n';
  model.embedding_table().write(out);
  auto write_rows = [&out](const std::vector<double>& values, std::size_t cols) {
    for (std::size_t i = 0; i < values.size(); i += cols) {
      for (std::size_t j = 0; j < cols; ++j) {
        if (j) out << ' ';
        out << format_real(values[i + j]);
      }
      out << '\n';
    }
  };
  write_rows(p.hidden_weights, p.embed_dim);
  write_rows(p.hidden_bias, p.hidden_dim);
  write_rows(p.output_weights, p.hidden_dim);
  write_rows(p.output_bias, p.label_count);
}

ReferenceClassifier read_checkpoint(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::MalformedCheckpoint, "empty checkpoint");
  std::size_t V = 0, D = 0, H = 0, C = 0;
  {
    std::istringstream hs(header);
    std::string magic, version, fv, fd, fh, fc;
    hs >> magic >> version >> fv >> fd >> fh >> fc;
    auto field = [](const std::string& token, const std::string& key, std::size_t& out) {
      if (token.rfind(key + "=", 0) != 0) return false;
      try {
        std::size_t used = 0;
        out = std::stoul(token.substr(key.size() + 1), &used);
        return used == token.size() - key.size() - 1;
      } catch (const std::exception&) {
        return false;
      }
    };
    if (magic != "GEOPROBE-REF" || version != "v1" || !field(fv, "vocab", V) ||
        !field(fd, "dim", D) || !field(fh, "hidden", H) || !field(fc, "labels", C)) {
      throw Error(ErrorCode::MalformedCheckpoint, "bad header `" + header + "`");
    }
  }
  EmbeddingTable table = read_table_block(in);
  if (table.size() != V || table.dim() != D) {
    throw Error(ErrorCode::MalformedCheckpoint, "embedding block disagrees with header");
  }
  if (V == 0 || table.word(0) != kUnknownToken) {
    throw Error(ErrorCode::MalformedCheckpoint, "row 0 must be the unknown token");
  }

  auto read_block = [&in](std::size_t count, const char* what) {
    std::vector<double> values(count);
    std::string token;
    for (std::size_t i = 0; i < count; ++i) {
      if (!(in >> token) || !parse_real(token, values[i])) {
        throw Error(ErrorCode::MalformedCheckpoint, std::string("truncated ") + what);
      }
    }
    return values;
  };
  ReferenceParams p;
  p.vocab = Vocabulary(table.words());
  p.embed_dim = D;
  p.hidden_dim = H;
  p.label_count = C;
  p.embeddings.reserve(V * D);
  for (std::size_t i = 0; i < V; ++i) {
    auto row = table.vector(i);
    p.embeddings.insert(p.embeddings.end(), row.begin(), row.end());
  }
  p.hidden_weights = read_block(H * D, "hidden weights");
  p.hidden_bias = read_block(H, "hidden bias");
  p.output_weights = read_block(C * H, "output weights");
  p.output_bias = read_block(C, "output bias");
  std::string extra;
  if (in >> extra) throw Error(ErrorCode::MalformedCheckpoint, "trailing data after output bias");
  return ReferenceClassifier(std::move(p));
}

void save_checkpoint(const ReferenceClassifier& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_checkpoint(model, out);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

ReferenceClassifier load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_checkpoint(in);
}

ReferenceSession::ReferenceSession(std::shared_ptr<const ReferenceClassifier> model)
    : model_(std::move(model)) {
  if (!model_) throw std::invalid_argument("null reference classifier");
}

void ReferenceSession::ensure_open() const {
  if (closed_) throw Error(ErrorCode::SessionClosed, "reference session");
}

TokenizedInput ReferenceSession::tokenize(std::string_view prompt, std::string_view text) {
  ensure_open();
  TokenizedInput out;
  out.words = split_words(text);
  if (out.words.empty()) throw Error(ErrorCode::EmptyText, "text has no words");
  out.prompt = std::string(prompt);
  for (const auto& w : split_words(prompt)) {
    auto ids = model_->vocab().encode_word(w);
    out.prompt_ids.insert(out.prompt_ids.end(), ids.begin(), ids.end());
  }
  for (const auto& w : out.words) {
    auto ids = model_->vocab().encode_word(w);
    const std::size_t begin = out.token_ids.size();
    out.token_ids.insert(out.token_ids.end(), ids.begin(), ids.end());
    out.spans.push_back({begin, out.token_ids.size()});
  }
  return out;
}

std::vector<int> ReferenceSession::full_sequence(const TokenizedInput& input) const {
  std::vector<int> ids = input.prompt_ids;
  ids.insert(ids.end(), input.token_ids.begin(), input.token_ids.end());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= model_->vocab().size()) {
      throw Error(ErrorCode::ProtocolError, "token id " + std::to_string(id) + " out of vocabulary");
    }
  }
  if (input.token_ids.empty()) throw Error(ErrorCode::EmptyText, "no text tokens");
  return ids;
}

ForwardOutput ReferenceSession::forward(const TokenizedInput& input, std::size_t label) {
  ensure_open();
  if (label >= model_->label_count()) {
    throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
  }
  ForwardOutput out;
  out.logits = model_->logits(full_sequence(input));
  out.loss = cross_entropy(out.logits, label);
  out.predicted = argmax(out.logits);
  return out;
}

EmbeddingGradient ReferenceSession::grad_wrt_embeddings(const TokenizedInput& input,
                                                        std::size_t label) {
  ensure_open();
  EmbeddingGradient g = model_->loss_gradient(full_sequence(input), label);
  g.per_token.erase(g.per_token.begin(),
                    g.per_token.begin() + static_cast<std::ptrdiff_t>(input.prompt_ids.size()));
  return g;
}

EmbeddingTable ReferenceSession::export_embeddings() {
  ensure_open();
  return model_->embedding_table();
}

}  // namespace geoprobe
