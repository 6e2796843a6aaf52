#include "geoprobe/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "geoprobe/error.hpp"

namespace geoprobe {
namespace {

constexpr double kTinyNorm = 1e-12;

bool skippable(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateGradient:
    case ErrorCode::DegenerateGeometry:
    case ErrorCode::NoCandidates:
    case ErrorCode::WordNotInTable:
    case ErrorCode::ZeroNormVector:
    case ErrorCode::EmptyText:
      return true;
    default:
      return false;
  }
}

}  // namespace

void AttackConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "epsilon must be in (0, 1], got " + format_real(epsilon));
  }
  if (pool_size == 0) throw Error(ErrorCode::InvalidConfig, "pool_size must be positive");
  if (max_cycles == 0) throw Error(ErrorCode::InvalidConfig, "max_cycles must be positive");
  if (!(budget_fraction > 0.0 && budget_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "budget_fraction must be in (0, 1], got " + format_real(budget_fraction));
  }
}

Vector average_over_span(const std::vector<Vector>& per_token, TokenSpan span) {
  if (span.end > per_token.size() || span.size() == 0) {
    throw Error(ErrorCode::LengthMismatch, "span outside gradient rows");
  }
  Vector mean(per_token[span.begin].size(), 0.0);
  for (std::size_t t = span.begin; t < span.end; ++t) {
    if (per_token[t].size() != mean.size()) throw Error(ErrorCode::LengthMismatch, "ragged gradient");
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += per_token[t][d];
  }
  const double inv = 1.0 / static_cast<double>(span.size());
  for (double& v : mean) v *= inv;
  return mean;
}

SaliencyRanking rank_words(const TokenizedInput& input, const EmbeddingGradient& gradient,
                           const std::set<std::size_t>& frozen) {
  if (gradient.per_token.size() != input.token_ids.size()) {
    throw Error(ErrorCode::LengthMismatch, "gradient rows do not match tokens");
  }
  SaliencyRanking ranking;
  for (std::size_t w = 0; w < input.spans.size(); ++w) {
    if (frozen.contains(w)) continue;
    SaliencyEntry entry;
    entry.word_index = w;
    entry.averaged_gradient = average_over_span(gradient.per_token, input.spans[w]);
    entry.score = l2_norm(entry.averaged_gradient);
    ranking.push_back(std::move(entry));
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const SaliencyEntry& a, const SaliencyEntry& b) { return a.score > b.score; });
  if (!ranking.empty() && ranking.front().score < kTinyNorm) {
    throw Error(ErrorCode::DegenerateGradient, "every word has a vanishing gradient");
  }
  return ranking;
}

SaliencyRanking word_saliency(ModelSession& session, const TokenizedInput& input,
                              std::size_t label, const std::set<std::size_t>& frozen) {
  if (!session.capabilities().grad) throw Error(ErrorCode::CapabilityMissing, "session lacks grad");
  return rank_words(input, session.grad_wrt_embeddings(input, label), frozen);
}

Vector deepfool_perturbation(std::span<const double> logits,
                             const std::vector<Vector>& class_gradients, std::size_t current) {
  if (logits.size() < 2 || class_gradients.size() != logits.size() || current >= logits.size()) {
    throw Error(ErrorCode::LengthMismatch, "deepfool needs one gradient per class and >= 2 classes");
  }
  const std::size_t dim = class_gradients[current].size();
  for (const auto& g : class_gradients) {
    if (g.size() != dim) throw Error(ErrorCode::LengthMismatch, "class gradients differ in length");
  }

  std::size_t best = logits.size();
  double best_ratio = std::numeric_limits<double>::infinity();
  Vector best_direction;
  double best_norm_sq = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (k == current) continue;
    Vector w(dim);
    for (std::size_t d = 0; d < dim; ++d) w[d] = class_gradients[k][d] - class_gradients[current][d];
    const double wnorm = l2_norm(w);
    if (wnorm <= kTinyNorm) continue;
    const double ratio = std::abs(logits[k] - logits[current]) / wnorm;
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best = k;
      best_direction = std::move(w);
      best_norm_sq = wnorm * wnorm;
    }
  }
  if (best == logits.size()) {
    throw Error(ErrorCode::DegenerateGeometry, "all class-gradient differences vanish");
  }
  const double scale = std::abs(logits[best] - logits[current]) / best_norm_sq;
  for (double& v : best_direction) v *= scale;
  return best_direction;
}

CandidateSet build_candidates(const EmbeddingTable& table, std::string_view original_word,
                              std::span<const double> perturbed, const AttackConfig& config,
                              std::size_t target_index) {
  auto original = table.vector_of(original_word);
  CandidateSet set;
  set.target_index = target_index;
  for (auto& hit : nearest_neighbors(table, perturbed, config.pool_size, {std::string(original_word)})) {
    const double sim = cosine(hit.vector, original);
    if (sim < config.epsilon) continue;
    set.candidates.push_back({std::move(hit.word), std::move(hit.vector), sim});
  }
  return set;
}

std::size_t select_replacement(std::span<const double> gradient,
                               const std::vector<Vector>& candidate_deltas) {
  const double vnorm = l2_norm(gradient);
  if (!(vnorm > kTinyNorm)) throw Error(ErrorCode::DegenerateGradient, "projection direction vanishes");
  if (candidate_deltas.empty()) throw Error(ErrorCode::NoCandidates, "no candidates to select from");
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t j = 0; j < candidate_deltas.size(); ++j) {
    const double value = std::abs(dot(candidate_deltas[j], gradient)) / vnorm;
    if (value > best_value) {
      best_value = value;
      best = j;
    }
  }
  return best;
}

std::string_view to_string(AttackStatus status) {
  switch (status) {
    case AttackStatus::Success: return "Success";
    case AttackStatus::Exhausted: return "Exhausted";
    case AttackStatus::BudgetExceeded: return "BudgetExceeded";
    case AttackStatus::AlreadyMisclassified: return "AlreadyMisclassified";
  }
  return "Unknown";
}

AttackStatus parse_attack_status(std::string_view name) {
  for (auto s : {AttackStatus::Success, AttackStatus::Exhausted, AttackStatus::BudgetExceeded,
                 AttackStatus::AlreadyMisclassified}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::MalformedReport, "unknown attack status `" + std::string(name) + "`");
}

AttackResult attack_sentence(ModelSession& session, const TokenizedInput& input,
                             std::size_t label, const EmbeddingTable& table,
                             const AttackConfig& config) {
  config.validate();
  if (!session.capabilities().grad) throw Error(ErrorCode::CapabilityMissing, "session lacks grad");
  if (table.dim() != session.embed_dim()) {
    throw Error(ErrorCode::LengthMismatch, "embedding table dim " + std::to_string(table.dim()) +
                                               " vs model dim " + std::to_string(session.embed_dim()));
  }
  if (input.words.empty()) throw Error(ErrorCode::EmptyText, "nothing to attack");

  const std::size_t n_words = input.words.size();
  const std::size_t n_labels = session.label_count();
  AttackResult result;
  result.original_words = input.words;
  result.adversarial_words = input.words;

  ForwardOutput clean = session.forward(input, label);
  result.loss_trace.push_back(clean.loss);
  result.final_prediction = clean.predicted;
  if (clean.predicted != label) {
    result.status = AttackStatus::AlreadyMisclassified;
    return result;
  }

  const auto budget = static_cast<std::size_t>(
      std::floor(config.budget_fraction * static_cast<double>(n_words) + 1e-9));
  if (budget == 0) {
    result.status = AttackStatus::BudgetExceeded;
    return result;
  }

  TokenizedInput current = input;
  double current_loss = clean.loss;
  std::set<std::size_t> frozen;
  result.status = AttackStatus::Exhausted;

  for (std::size_t cycle = 1; cycle <= config.max_cycles; ++cycle) {
    result.cycles_used = cycle;

    // One loss-gradient pass per label. Since grad L_k = -grad f_k + sum_j p_j grad f_j,
    // differences of -grad L_k equal differences of logit gradients, which is all the
    // DeepFool step consumes.
    std::vector<EmbeddingGradient> per_label;
    per_label.reserve(n_labels);
    for (std::size_t k = 0; k < n_labels; ++k) {
      per_label.push_back(session.grad_wrt_embeddings(current, k));
    }
    const EmbeddingGradient& loss_grad = per_label[label];

    SaliencyRanking ranking;
    try {
      ranking = rank_words(current, loss_grad, frozen);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateGradient) throw;
      spdlog::debug("cycle {}: degenerate saliency", cycle);
      break;
    }

    bool accepted = false;
    for (const SaliencyEntry& entry : ranking) {
      const std::size_t w = entry.word_index;
      const std::string word = current.words[w];
      try {
        std::vector<Vector> class_gradients(n_labels);
        for (std::size_t k = 0; k < n_labels; ++k) {
          class_gradients[k] = average_over_span(per_label[k].per_token, current.spans[w]);
          for (double& v : class_gradients[k]) v = -v;
        }
        const Vector r = deepfool_perturbation(loss_grad.logits, class_gradients, label);
        auto original = table.vector_of(word);
        Vector perturbed(original.begin(), original.end());
        for (std::size_t d = 0; d < perturbed.size(); ++d) perturbed[d] += r[d];

        CandidateSet set = build_candidates(table, word, perturbed, config, w);
        if (set.candidates.empty()) continue;
        // Candidates differ from the sentence only in slot w, so the flattened
        // projection reduces to this slot's delta against its gradient.
        std::vector<Vector> deltas;
        deltas.reserve(set.candidates.size());
        for (const auto& c : set.candidates) {
          Vector delta(c.vector.size());
          for (std::size_t d = 0; d < delta.size(); ++d) delta[d] = c.vector[d] - original[d];
          deltas.push_back(std::move(delta));
        }
        const std::size_t m = select_replacement(entry.averaged_gradient, deltas);
        const Candidate& chosen = set.candidates[m];

        std::vector<std::string> words = current.words;
        words[w] = chosen.word;
        TokenizedInput next = retokenize(session, current, words);
        if (next.words.size() != n_words) continue;
        ForwardOutput out = session.forward(next, label);
        if (config.require_loss_increase && !(out.loss > current_loss)) continue;

        current = std::move(next);
        current_loss = out.loss;
        frozen.insert(w);
        result.loss_trace.push_back(out.loss);
        result.final_prediction = out.predicted;
        result.replacements.push_back({w, word, chosen.word, chosen.similarity_to_original});
        accepted = true;
        break;
      } catch (const Error& e) {
        if (!skippable(e.code())) throw;
        spdlog::trace("cycle {} word {}: skipped ({})", cycle, w, e.what());
      }
    }

    if (!accepted) break;  // the sentence is unchanged, so later cycles would repeat this one
    if (result.final_prediction != label) {
      result.status = AttackStatus::Success;
      break;
    }
    if (frozen.size() >= budget) {
      result.status = AttackStatus::BudgetExceeded;
      break;
    }
  }

  result.adversarial_words = current.words;
  result.replaced_indices.assign(frozen.begin(), frozen.end());
  result.replacement_rate = static_cast<double>(frozen.size()) / static_cast<double>(n_words);
  return result;
}

}  // namespace geoprobe
