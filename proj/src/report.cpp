#include "geoprobe/report.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "geoprobe/error.hpp"

namespace geoprobe {

using nlohmann::json;

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string marked_sentence(const std::vector<std::string>& words, const std::set<std::size_t>& marks) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    if (marks.contains(i)) {
      out += "[[" + words[i] + "]]";
    } else {
      out += words[i];
    }
  }
  return out;
}

json result_to_json(const SampleOutcome& s) {
  const AttackResult& r = s.result;
  json reps = json::array();
  for (const auto& rep : r.replacements) {
    reps.push_back({{"word_index", rep.word_index},
                    {"original", rep.original},
                    {"replacement", rep.replacement},
                    {"similarity", rep.similarity}});
  }
  return {{"index", s.index},
          {"label", s.label},
          {"status", std::string(to_string(r.status))},
          {"original_words", r.original_words},
          {"adversarial_words", r.adversarial_words},
          {"replaced_indices", r.replaced_indices},
          {"replacements", reps},
          {"cycles_used", r.cycles_used},
          {"loss_trace", r.loss_trace},
          {"final_prediction", r.final_prediction},
          {"replacement_rate", r.replacement_rate}};
}

SampleOutcome result_from_json(const json& j) {
  SampleOutcome s;
  s.index = j.at("index").get<std::size_t>();
  s.label = j.at("label").get<std::size_t>();
  AttackResult& r = s.result;
  r.status = parse_attack_status(j.at("status").get<std::string>());
  r.original_words = j.at("original_words").get<std::vector<std::string>>();
  r.adversarial_words = j.at("adversarial_words").get<std::vector<std::string>>();
  r.replaced_indices = j.at("replaced_indices").get<std::vector<std::size_t>>();
  for (const auto& rep : j.at("replacements")) {
    r.replacements.push_back({rep.at("word_index").get<std::size_t>(), rep.at("original").get<std::string>(),
                              rep.at("replacement").get<std::string>(), rep.at("similarity").get<double>()});
  }
  r.cycles_used = j.at("cycles_used").get<std::size_t>();
  r.loss_trace = j.at("loss_trace").get<std::vector<double>>();
  r.final_prediction = j.at("final_prediction").get<std::size_t>();
  r.replacement_rate = j.at("replacement_rate").get<double>();
  return s;
}

}  // namespace

std::string format_metrics_row(const MetricsReport& r) {
  return fixed4(r.acc) + " " + fixed4(r.acc_under_attack) + " " + fixed4(r.asr) + " " +
         fixed4(r.replacement);
}

std::string format_metrics_table(const std::vector<MetricsReport>& reports) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& r : reports) out += format_metrics_row(r) + '\n';
  return out;
}

std::string format_examples(const std::vector<SampleOutcome>& samples, bool successes_only) {
  std::ostringstream out;
  for (const auto& s : samples) {
    const AttackResult& r = s.result;
    if (r.status == AttackStatus::AlreadyMisclassified) continue;
    if (successes_only && r.status != AttackStatus::Success) continue;
    std::set<std::size_t> marks(r.replaced_indices.begin(), r.replaced_indices.end());
    out << "# sample " << s.index << " label=" << s.label << " status=" << to_string(r.status)
        << " prediction=" << r.final_prediction << " replaced=" << marks.size() << '/'
        << r.original_words.size() << '\n';
    out << "original:    " << marked_sentence(r.original_words, marks) << '\n';
    out << "adversarial: " << marked_sentence(r.adversarial_words, marks) << '\n';
  }
  return out.str();
}

json report_to_json(const MetricsReport& report, const std::vector<SampleOutcome>& samples) {
  const EvalCounts& c = report.counts;
  json results = json::array();
  for (const auto& s : samples) results.push_back(result_to_json(s));
  return {{"config", report.config},
          {"counts",
           {{"n_total", c.n_total},
            {"n_correct_clean", c.n_correct_clean},
            {"n_attacked", c.n_attacked},
            {"n_flipped", c.n_flipped},
            {"flipped_replacement_rates", c.flipped_rates}}},
          {"metrics",
           {{"acc", report.acc},
            {"acc_under_attack", report.acc_under_attack},
            {"asr", report.asr},
            {"replacement", report.replacement}}},
          {"results", results}};
}

StructuredReport report_from_json(const json& doc) {
  StructuredReport out;
  try {
    const auto& c = doc.at("counts");
    EvalCounts counts;
    counts.n_total = c.at("n_total").get<std::size_t>();
    counts.n_correct_clean = c.at("n_correct_clean").get<std::size_t>();
    counts.n_attacked = c.at("n_attacked").get<std::size_t>();
    counts.n_flipped = c.at("n_flipped").get<std::size_t>();
    counts.flipped_rates = c.value("flipped_replacement_rates", std::vector<double>{});
    out.metrics = compute_metrics(counts);
    out.metrics.config = doc.value("config", json::object());
    if (doc.contains("metrics")) {
      // Stored values win so a round trip cannot drift.
      const auto& m = doc["metrics"];
      out.metrics.acc = m.at("acc").get<double>();
      out.metrics.acc_under_attack = m.at("acc_under_attack").get<double>();
      out.metrics.asr = m.at("asr").get<double>();
      out.metrics.replacement = m.at("replacement").get<double>();
    }
    for (const auto& r : doc.value("results", json::array())) out.samples.push_back(result_from_json(r));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedReport, e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedReport, e.what());
  }
  return out;
}

std::string emit_report(const MetricsReport& report, const std::vector<SampleOutcome>& samples,
                        ReportFormat format) {
  if (format == ReportFormat::TextTable) return format_metrics_table({report});
  return report_to_json(report, samples).dump(2) + "\n";
}

StructuredReport parse_structured_report(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedReport, e.what());
  }
  return report_from_json(doc);
}

StructuredReport load_structured_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open report " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_structured_report(buf.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedReport, path.string() + ": " + e.what());
  }
}

void write_file_atomically(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename to " + path.string() + ": " + ec.message());
}

}  // namespace geoprobe
