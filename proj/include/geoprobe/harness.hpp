#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoprobe/attack.hpp"
#include "geoprobe/classifier.hpp"
#include "geoprobe/reference_classifier.hpp"

namespace geoprobe {

inline constexpr std::string_view kTextPlaceholder = "{text}";

struct DeclaredCounts {
  std::size_t train = 0;
  std::size_t test = 0;
};

struct DatasetManifest {
  std::string name;
  std::vector<std::string> label_names;
  std::optional<DeclaredCounts> declared_counts;
  std::optional<double> avg_length;
  std::string prompt_template = std::string(kTextPlaceholder);

  std::size_t label_count() const noexcept { return label_names.size(); }
  /// The template with the placeholder removed, whitespace-normalized.
  std::string prompt() const;
  /// The template with `text` substituted.
  std::string render(std::string_view text) const;
  /// Throws MalformedManifest.
  void validate() const;
};

DatasetManifest parse_manifest(const nlohmann::json& doc);
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

enum class Split { Unspecified, Train, Test };

struct Dataset {
  std::vector<LabeledText> samples;
  std::vector<std::string> warnings;  // e.g. size differs from the declared count
};

/// One JSON object per line with `text` (string) and `label` (integer >= 0).
/// Throws MalformedRecord, LabelOutOfRange or EmptyDataset; line numbers are
/// 1-based in messages.
Dataset parse_dataset(std::istream& in, const DatasetManifest& manifest,
                      Split split = Split::Unspecified);
Dataset load_dataset(const std::filesystem::path& path, const DatasetManifest& manifest,
                     Split split = Split::Unspecified);
void write_dataset(const std::vector<LabeledText>& samples, const std::filesystem::path& path);

struct CleanEvaluation {
  std::vector<std::size_t> predictions;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
};

/// Throws EmptyDataset; session errors propagate.
CleanEvaluation evaluate_clean(ModelSession& session, const std::vector<LabeledText>& samples,
                               const DatasetManifest& manifest);

struct EvalCounts {
  std::size_t n_total = 0;
  std::size_t n_correct_clean = 0;
  std::size_t n_attacked = 0;
  std::size_t n_flipped = 0;
  std::vector<double> flipped_rates;  // replacement rate of each flipped sample

  bool operator==(const EvalCounts&) const = default;
};

struct SampleOutcome {
  std::size_t index = 0;
  std::size_t label = 0;
  AttackResult result;

  bool operator==(const SampleOutcome&) const = default;
};

struct SuiteResult {
  CleanEvaluation clean;
  std::vector<SampleOutcome> samples;  // ordered by sample index
  EvalCounts counts;
};

using SessionFactory = std::function<std::unique_ptr<ModelSession>()>;

/// Attacks every clean-correct sample; clean-incorrect ones are recorded as
/// AlreadyMisclassified. `workers` sessions are opened from `factory` and
/// samples are handed out dynamically; output order is by sample index.
/// A sample whose attack throws is recorded as Exhausted.
SuiteResult run_attack_suite(const SessionFactory& factory, const std::vector<LabeledText>& samples,
                             const DatasetManifest& manifest, const EmbeddingTable& table,
                             const AttackConfig& config, std::size_t workers = 1);

/// Serial variant on a caller-owned session.
SuiteResult run_attack_suite(ModelSession& session, const std::vector<LabeledText>& samples,
                             const DatasetManifest& manifest, const EmbeddingTable& table,
                             const AttackConfig& config);

/// Builds counts from per-sample outcomes. Order-independent.
EvalCounts tally(const std::vector<SampleOutcome>& samples);

struct MetricsReport {
  double acc = 0.0;
  double acc_under_attack = 0.0;
  double asr = 0.0;
  double replacement = 0.0;
  EvalCounts counts;
  nlohmann::json config = nlohmann::json::object();
};

/// Throws InvalidCounts when the counts break their invariants.
MetricsReport compute_metrics(const EvalCounts& counts);

}  // namespace geoprobe
