#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoprobe/classifier.hpp"
#include "geoprobe/embedding_store.hpp"

namespace geoprobe {

struct AttackConfig {
  double epsilon = 0.7;          // min cosine(candidate, original word)
  std::size_t pool_size = 25;    // neighbors retrieved per target word
  std::size_t max_cycles = 50;
  double budget_fraction = 0.25; // max share of words replaced
  std::uint64_t seed = 0;
  bool require_loss_increase = true;

  /// Throws InvalidConfig naming the offending field.
  void validate() const;
};

struct SaliencyEntry {
  std::size_t word_index = 0;
  double score = 0.0;
  Vector averaged_gradient;
};

/// Sorted by score descending, ties by lower word index.
using SaliencyRanking = std::vector<SaliencyEntry>;

/// Mean of the gradient rows inside `span`.
Vector average_over_span(const std::vector<Vector>& per_token, TokenSpan span);

/// Ranks words of `input` by the norm of their averaged sub-token gradient,
/// skipping `frozen` word indices. Throws DegenerateGradient when every
/// remaining score is below 1e-12.
SaliencyRanking rank_words(const TokenizedInput& input, const EmbeddingGradient& gradient,
                           const std::set<std::size_t>& frozen = {});

/// Throws CapabilityMissing or DegenerateGradient.
SaliencyRanking word_saliency(ModelSession& session, const TokenizedInput& input,
                              std::size_t label, const std::set<std::size_t>& frozen = {});

/// Single multiclass DeepFool step in one word's embedding slot.
///
/// With w_k = grad f_k - grad f_cur and g_k = f_k - f_cur, picks
/// k* = argmin_{k != cur} |g_k| / |w_k| (ties -> lowest k) and returns
/// r* = |g_k*| / |w_k*|^2 * w_k*. Classes whose |w_k| <= 1e-12 are skipped;
/// if all are, throws DegenerateGeometry.
Vector deepfool_perturbation(std::span<const double> logits,
                             const std::vector<Vector>& class_gradients, std::size_t current);

struct Candidate {
  std::string word;
  Vector vector;
  double similarity_to_original = 0.0;
};

struct CandidateSet {
  std::size_t target_index = 0;
  std::vector<Candidate> candidates;
};

/// pool_size nearest neighbors of `perturbed` (original excluded), then keeps
/// those with cosine to the original word >= epsilon, in neighbor order.
/// Throws WordNotInTable.
CandidateSet build_candidates(const EmbeddingTable& table, std::string_view original_word,
                              std::span<const double> perturbed, const AttackConfig& config,
                              std::size_t target_index = 0);

/// argmax_j |delta_j . v| / |v|, ties -> lowest j (0-based).
/// Throws DegenerateGradient (|v| <= 1e-12), NoCandidates or LengthMismatch.
std::size_t select_replacement(std::span<const double> gradient,
                               const std::vector<Vector>& candidate_deltas);

enum class AttackStatus { Success, Exhausted, BudgetExceeded, AlreadyMisclassified };

std::string_view to_string(AttackStatus status);
AttackStatus parse_attack_status(std::string_view name);

struct Replacement {
  std::size_t word_index = 0;
  std::string original;
  std::string replacement;
  double similarity = 0.0;

  bool operator==(const Replacement&) const = default;
};

struct AttackResult {
  AttackStatus status = AttackStatus::Exhausted;
  std::vector<std::string> original_words;
  std::vector<std::string> adversarial_words;
  std::vector<std::size_t> replaced_indices;  // ascending
  std::vector<Replacement> replacements;      // in the order applied
  std::size_t cycles_used = 0;
  std::vector<double> loss_trace;             // clean loss first
  std::size_t final_prediction = 0;
  double replacement_rate = 0.0;

  bool operator==(const AttackResult&) const = default;
};

/// Iterated geometry attack on one sentence. Per-word failures (degenerate
/// geometry, no surviving candidates, word missing from the table) skip to
/// the next-ranked word; only session errors propagate.
AttackResult attack_sentence(ModelSession& session, const TokenizedInput& input,
                             std::size_t label, const EmbeddingTable& table,
                             const AttackConfig& config);

}  // namespace geoprobe
