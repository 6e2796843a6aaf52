#include "geoprobe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <istream>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "geoprobe/error.hpp"
#include "geoprobe/tokenizer.hpp"

namespace geoprobe {

using nlohmann::json;

std::string DatasetManifest::prompt() const {
  std::string t = prompt_template;
  const auto pos = t.find(kTextPlaceholder);
  if (pos != std::string::npos) t.replace(pos, kTextPlaceholder.size(), " ");
  return join_words(split_words(t));
}

std::string DatasetManifest::render(std::string_view text) const {
  std::string t = prompt_template;
  const auto pos = t.find(kTextPlaceholder);
  if (pos != std::string::npos) t.replace(pos, kTextPlaceholder.size(), text);
  return t;
}

void DatasetManifest::validate() const {
  if (label_names.empty()) throw Error(ErrorCode::MalformedManifest, "label_names is empty");
  std::vector<std::string> sorted = label_names;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::MalformedManifest, "label_names are not unique");
  }
  const auto first = prompt_template.find(kTextPlaceholder);
  if (first == std::string::npos ||
      prompt_template.find(kTextPlaceholder, first + 1) != std::string::npos) {
    throw Error(ErrorCode::MalformedManifest, "prompt_template needs exactly one {text}");
  }
  if (avg_length && !(*avg_length >= 0.0)) {
    throw Error(ErrorCode::MalformedManifest, "avg_length must be nonnegative");
  }
}

DatasetManifest parse_manifest(const json& doc) {
  DatasetManifest m;
  try {
    m.name = doc.at("name").get<std::string>();
    m.label_names = doc.at("label_names").get<std::vector<std::string>>();
    m.prompt_template = doc.value("prompt_template", std::string(kTextPlaceholder));
    if (doc.contains("declared_counts") && !doc["declared_counts"].is_null()) {
      const auto& dc = doc["declared_counts"];
      if (dc.at("train").get<long long>() < 0 || dc.at("test").get<long long>() < 0) {
        throw Error(ErrorCode::MalformedManifest, "declared counts must be nonnegative");
      }
      m.declared_counts = DeclaredCounts{dc.at("train").get<std::size_t>(), dc.at("test").get<std::size_t>()};
    }
    if (doc.contains("avg_length") && !doc["avg_length"].is_null()) {
      m.avg_length = doc["avg_length"].get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedManifest, e.what());
  }
  m.validate();
  return m;
}

json manifest_to_json(const DatasetManifest& m) {
  json doc = {{"name", m.name}, {"label_names", m.label_names}, {"prompt_template", m.prompt_template}};
  if (m.declared_counts) {
    doc["declared_counts"] = {{"train", m.declared_counts->train}, {"test", m.declared_counts->test}};
  }
  if (m.avg_length) doc["avg_length"] = *m.avg_length;
  return doc;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + path.string());
  try {
    return parse_manifest(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedManifest, path.string() + ": " + e.what());
  }
}

Dataset parse_dataset(std::istream& in, const DatasetManifest& manifest, Split split) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_words(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception&) {
      throw Error(ErrorCode::MalformedRecord, where + ": not a JSON object");
    }
    if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string() ||
        !rec.contains("label") || !rec["label"].is_number_integer()) {
      throw Error(ErrorCode::MalformedRecord, where + ": needs string `text` and integer `label`");
    }
    const auto label = rec["label"].get<long long>();
    if (label < 0) throw Error(ErrorCode::MalformedRecord, where + ": negative label");
    if (static_cast<std::size_t>(label) >= manifest.label_count()) {
      throw Error(ErrorCode::LabelOutOfRange, where + ": label " + std::to_string(label) + " with " +
                                                  std::to_string(manifest.label_count()) + " labels");
    }
    ds.samples.push_back({rec["text"].get<std::string>(), static_cast<std::size_t>(label)});
  }
  if (ds.samples.empty()) throw Error(ErrorCode::EmptyDataset, "no records");
  if (manifest.declared_counts && split != Split::Unspecified) {
    const std::size_t declared =
        split == Split::Train ? manifest.declared_counts->train : manifest.declared_counts->test;
    if (declared != ds.samples.size()) {
      ds.warnings.push_back(std::string(split == Split::Train ? "train" : "test") +
                            " split has " + std::to_string(ds.samples.size()) +
                            " records, manifest declares " + std::to_string(declared));
      spdlog::warn("{}: {}", manifest.name, ds.warnings.back());
    }
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const DatasetManifest& manifest, Split split) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open dataset " + path.string());
  return parse_dataset(in, manifest, split);
}

void write_dataset(const std::vector<LabeledText>& samples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& s : samples) out << json{{"label", s.label}, {"text", s.text}}.dump() << '\n';
}

CleanEvaluation evaluate_clean(ModelSession& session, const std::vector<LabeledText>& samples,
                               const DatasetManifest& manifest) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to evaluate");
  const std::string prompt = manifest.prompt();
  CleanEvaluation eval;
  eval.predictions.reserve(samples.size());
  for (const auto& s : samples) {
    auto input = session.tokenize(prompt, s.text);
    auto out = session.forward(input, s.label);
    eval.predictions.push_back(out.predicted);
    if (out.predicted == s.label) ++eval.n_correct;
  }
  eval.accuracy = static_cast<double>(eval.n_correct) / static_cast<double>(samples.size());
  return eval;
}

namespace {

SampleOutcome attack_one(ModelSession& session, const LabeledText& sample, std::size_t index,
                         std::size_t clean_prediction, const std::string& prompt,
                         const EmbeddingTable& table, const AttackConfig& config) {
  SampleOutcome outcome;
  outcome.index = index;
  outcome.label = sample.label;
  TokenizedInput input;
  try {
    input = session.tokenize(prompt, sample.text);
    if (clean_prediction != sample.label) {
      outcome.result.status = AttackStatus::AlreadyMisclassified;
      outcome.result.original_words = input.words;
      outcome.result.adversarial_words = input.words;
      outcome.result.final_prediction = clean_prediction;
      return outcome;
    }
    outcome.result = attack_sentence(session, input, sample.label, table, config);
  } catch (const std::exception& e) {
    spdlog::warn("sample {}: attack failed: {}", index, e.what());
    outcome.result = AttackResult{};
    outcome.result.status = AttackStatus::Exhausted;
    outcome.result.original_words = input.words.empty() ? split_words(sample.text) : input.words;
    outcome.result.adversarial_words = outcome.result.original_words;
    outcome.result.final_prediction = clean_prediction;
  }
  return outcome;
}

}  // namespace

EvalCounts tally(const std::vector<SampleOutcome>& samples) {
  EvalCounts c;
  c.n_total = samples.size();
  for (const auto& s : samples) {
    if (s.result.status == AttackStatus::AlreadyMisclassified) continue;
    ++c.n_correct_clean;
    if (s.result.status == AttackStatus::Success) {
      ++c.n_flipped;
      c.flipped_rates.push_back(s.result.replacement_rate);
    }
  }
  c.n_attacked = c.n_correct_clean;
  std::sort(c.flipped_rates.begin(), c.flipped_rates.end());
  return c;
}

SuiteResult run_attack_suite(const SessionFactory& factory, const std::vector<LabeledText>& samples,
                             const DatasetManifest& manifest, const EmbeddingTable& table,
                             const AttackConfig& config, std::size_t workers) {
  config.validate();
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to attack");
  workers = std::clamp<std::size_t>(workers, 1, samples.size());

  SuiteResult suite;
  {
    auto session = factory();
    suite.clean = evaluate_clean(*session, samples, manifest);
  }
  const std::string prompt = manifest.prompt();
  suite.samples.resize(samples.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto work = [&]() {
    try {
      auto session = factory();
      for (std::size_t i = next.fetch_add(1); i < samples.size(); i = next.fetch_add(1)) {
        suite.samples[i] = attack_one(*session, samples[i], i, suite.clean.predictions[i], prompt,
                                      table, config);
      }
      session->close();
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      next.store(samples.size());
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
  suite.counts = tally(suite.samples);
  return suite;
}

SuiteResult run_attack_suite(ModelSession& session, const std::vector<LabeledText>& samples,
                             const DatasetManifest& manifest, const EmbeddingTable& table,
                             const AttackConfig& config) {
  config.validate();
  SuiteResult suite;
  suite.clean = evaluate_clean(session, samples, manifest);
  const std::string prompt = manifest.prompt();
  suite.samples.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    suite.samples.push_back(
        attack_one(session, samples[i], i, suite.clean.predictions[i], prompt, table, config));
  }
  suite.counts = tally(suite.samples);
  return suite;
}

MetricsReport compute_metrics(const EvalCounts& counts) {
  const auto& c = counts;
  if (c.n_total == 0 || c.n_correct_clean > c.n_total || c.n_attacked != c.n_correct_clean ||
      c.n_flipped > c.n_attacked) {
    throw Error(ErrorCode::InvalidCounts,
                "need 0 <= flipped <= attacked = correct <= total, total > 0");
  }
  if (!c.flipped_rates.empty() && c.flipped_rates.size() != c.n_flipped) {
    throw Error(ErrorCode::InvalidCounts, "one replacement rate per flipped sample");
  }
  for (double r : c.flipped_rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::InvalidCounts, "replacement rate outside [0, 1]");
  }
  MetricsReport report;
  report.counts = counts;
  const double total = static_cast<double>(c.n_total);
  report.acc = static_cast<double>(c.n_correct_clean) / total;
  report.asr = c.n_attacked == 0 ? 0.0
                                 : static_cast<double>(c.n_flipped) / static_cast<double>(c.n_attacked);
  report.acc_under_attack = static_cast<double>(c.n_correct_clean - c.n_flipped) / total;
  if (!c.flipped_rates.empty()) {
    // Summed in sorted order so the mean does not depend on record order.
    std::vector<double> rates = c.flipped_rates;
    std::sort(rates.begin(), rates.end());
    double sum = 0.0;
    for (double r : rates) sum += r;
    report.replacement = sum / static_cast<double>(rates.size());
  }
  return report;
}

}  // namespace geoprobe
