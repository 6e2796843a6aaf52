#include "geoprobe/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "geoprobe/harness.hpp"
#include "geoprobe/remote_session.hpp"
#include "geoprobe/report.hpp"

namespace geoprobe::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
const T& require(const std::optional<T>& value, const char* key) {
  if (!value) throw Error(ErrorCode::InvalidConfig, std::string("field `") + key + "` is required");
  return *value;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::string> read_vocab_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open vocab " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    auto words = split_words(line);
    if (words.size() > 1) {
      throw Error(ErrorCode::MalformedRecord,
                  path.string() + ":" + std::to_string(tokens.size() + 1) + ": one token per line");
    }
    if (!words.empty()) tokens.push_back(words.front());
  }
  return tokens;
}

Dataset load_logged(const fs::path& path, const DatasetManifest& manifest, Split split) {
  Dataset data = load_dataset(path, manifest, split);
  for (const auto& w : data.warnings) spdlog::warn("{}: {}", path.string(), w);
  return data;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
      return kExitConfig;
    case ErrorCode::ConnectFailed:
    case ErrorCode::ProtocolVersionMismatch:
    case ErrorCode::ProtocolError:
    case ErrorCode::RemoteError:
    case ErrorCode::CapabilityMissing:
    case ErrorCode::SessionClosed:
      return kExitConnectivity;
    default:
      return kExitData;
  }
}

void configure_logging() {
  auto logger = spdlog::get("geoprobe");
  if (!logger) {
    logger = spdlog::stderr_color_mt("geoprobe");
    spdlog::set_default_logger(logger);
  }
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("GEOPROBE_LOG"); env && *env) {
    const std::string name(env);
    level = spdlog::level::from_str(name);
    if (level == spdlog::level::off && name != "off") {
      level = spdlog::level::warn;
      spdlog::warn("GEOPROBE_LOG={} is not a log level, using warn", name);
    }
  }
  spdlog::set_level(level);
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  const fs::path& train_path = require(config.train_dataset, "train_dataset");
  const fs::path& manifest_path = require(config.manifest, "manifest");
  const TrainConfig base = config.train_config();
  if (base.embed_dim == 0 || base.hidden_dim == 0 || base.batch_size == 0 ||
      !(base.learning_rate > 0.0) || !(base.embedding_init > 0.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "training: embed_dim, hidden_dim, batch_size, learning_rate and embedding_init must be positive");
  }

  const DatasetManifest manifest = load_manifest(manifest_path);
  const Dataset train = load_logged(train_path, manifest, Split::Train);
  TrainConfig tc = base;
  tc.label_count = manifest.label_count();
  tc.prompt = manifest.prompt();
  if (config.vocab) tc.vocabulary = read_vocab_file(*config.vocab);

  auto model = std::make_shared<const ReferenceClassifier>(train_reference(train.samples, tc));

  const fs::path checkpoint = config.checkpoint.value_or(config.output_dir / "reference.ckpt");
  ensure_directory(config.output_dir);
  if (checkpoint.has_parent_path()) ensure_directory(checkpoint.parent_path());
  std::ostringstream ckpt;
  write_checkpoint(*model, ckpt);
  write_file_atomically(checkpoint, ckpt.str());

  const bool held_out = config.dataset.has_value();
  const Dataset eval = held_out ? load_logged(*config.dataset, manifest, Split::Test) : train;
  ReferenceSession session(model);
  const CleanEvaluation clean = evaluate_clean(session, eval.samples, manifest);

  json training = config_to_json(config)["training"];
  json report = {{"acc", clean.accuracy},
                 {"n_total", eval.samples.size()},
                 {"n_correct", clean.n_correct},
                 {"split", held_out ? "dataset" : "train_dataset"},
                 {"config", {{"seed", config.seed}, {"training", training}, {"tags", config.tags}}}};
  write_file_atomically(config.output_dir / "train_report.json", report.dump(2) + "\n");

  char line[96];
  std::snprintf(line, sizeof(line), "acc %.4f (%zu/%zu)\n", clean.accuracy, clean.n_correct,
                eval.samples.size());
  out << line;
  out << "checkpoint " << checkpoint.string() << '\n';
}

void cmd_attack(const RunConfig& config, std::ostream& out) {
  const AttackConfig attack = config.attack_config();
  attack.validate();
  if (config.checkpoint.has_value() == config.endpoint.has_value()) {
    throw Error(ErrorCode::InvalidConfig, "exactly one of `checkpoint` and `endpoint` must be set");
  }
  if (!(config.timeout_seconds > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "timeout_seconds must be positive");
  }
  const fs::path& data_path = require(config.dataset, "dataset");
  const fs::path& manifest_path = require(config.manifest, "manifest");

  const DatasetManifest manifest = load_manifest(manifest_path);
  const Dataset data = load_logged(data_path, manifest, Split::Test);

  SessionFactory factory;
  std::unique_ptr<ModelSession> probe;
  std::size_t workers = config.resolved_workers();
  std::shared_ptr<const ReferenceClassifier> model;
  std::string model_tag;
  if (config.checkpoint) {
    model = std::make_shared<const ReferenceClassifier>(load_checkpoint(*config.checkpoint));
    factory = [model] { return std::make_unique<ReferenceSession>(model); };
    probe = factory();
    model_tag = "reference";
  } else {
    RemoteOptions options;
    options.timeout_seconds = config.timeout_seconds;
    const std::string endpoint = *config.endpoint;
    probe = open_remote_session(endpoint, options);
    const BridgeInfo& info = remote_info(*probe);
    workers = std::min<std::size_t>(workers, static_cast<std::size_t>(std::max(1, info.max_concurrency)));
    factory = [endpoint, options] { return open_remote_session(endpoint, options); };
    model_tag = info.model_tag;
  }
  if (probe->label_count() != manifest.label_count()) {
    throw Error(ErrorCode::MalformedManifest,
                "manifest has " + std::to_string(manifest.label_count()) + " labels, model has " +
                    std::to_string(probe->label_count()));
  }

  const EmbeddingTable table = config.embedding_table ? load_table(*config.embedding_table)
                               : model                ? model->embedding_table()
                                                      : probe->export_embeddings();
  probe->close();

  spdlog::info("attacking {} samples with {} worker(s)", data.samples.size(), workers);
  const SuiteResult suite = run_attack_suite(factory, data.samples, manifest, table, attack, workers);
  MetricsReport metrics = compute_metrics(suite.counts);
  metrics.config = config.echo();
  metrics.config["dataset"] = manifest.name;
  metrics.config["model"] = model_tag;

  ensure_directory(config.output_dir);
  write_file_atomically(config.output_dir / "report.json",
                        emit_report(metrics, suite.samples, ReportFormat::Structured));
  write_file_atomically(config.output_dir / "adversarial_examples.txt", format_examples(suite.samples));
  out << emit_report(metrics, suite.samples, ReportFormat::TextTable);
}

void cmd_report(const std::vector<fs::path>& reports, std::ostream& out) {
  if (reports.empty()) throw Error(ErrorCode::InvalidConfig, "report needs at least one structured report");
  std::vector<MetricsReport> rows;
  rows.reserve(reports.size());
  for (const auto& path : reports) rows.push_back(load_structured_report(path).metrics);
  out << format_metrics_table(rows);
}

void cmd_synth(const SyntheticSpec& spec, const fs::path& output_dir, std::ostream& out) {
  SyntheticCorpus corpus;
  try {
    corpus = make_synthetic_corpus(spec);
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  ensure_directory(output_dir);
  write_dataset(corpus.train, output_dir / "train.jsonl");
  write_dataset(corpus.test, output_dir / "test.jsonl");
  write_file_atomically(output_dir / "manifest.json", manifest_to_json(corpus.manifest).dump(2) + "\n");
  std::string vocab;
  for (const auto& w : corpus.lexicon) vocab += w + '\n';
  write_file_atomically(output_dir / "vocab.txt", vocab);

  RunConfig config;
  config.train_dataset = output_dir / "train.jsonl";
  config.dataset = output_dir / "test.jsonl";
  config.manifest = output_dir / "manifest.json";
  config.vocab = output_dir / "vocab.txt";
  config.checkpoint = output_dir / "reference.ckpt";
  config.output_dir = output_dir;
  config.seed = spec.seed;
  json doc = config_to_json(config);
  doc.erase("workers");
  write_file_atomically(output_dir / "config.json", doc.dump(2) + "\n");
  out << "wrote " << corpus.train.size() << " train / " << corpus.test.size() << " test samples to "
      << output_dir.string() << '\n';
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  configure_logging();

  CLI::App app{"Word-substitution geometry attack toolkit", "geoprobe"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_file;
  json overrides = json::object();
  auto set = [&overrides](const std::string& key) {
    return [&overrides, key](const auto& value) { overrides[key] = value; };
  };
  auto set_training = [&overrides](const std::string& key) {
    return [&overrides, key](const auto& value) { overrides["training"][key] = value; };
  };

  app.add_option("--config", config_file, "JSON config file");
  app.add_option_function<std::uint64_t>("--seed", set("seed"), "random seed");
  app.add_option_function<std::size_t>("--workers", set("workers"), "parallel sessions (0: all cores)");

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option_function<std::string>("--dataset", set("dataset"), "JSONL dataset");
    cmd->add_option_function<std::string>("--manifest", set("manifest"), "dataset manifest");
    cmd->add_option_function<std::string>("--checkpoint", set("checkpoint"), "reference checkpoint");
    cmd->add_option_function<std::string>("--output-dir", set("output_dir"), "output directory");
    cmd->add_option_function<std::vector<std::string>>("--tags", set("tags"), "run labels");
  };

  CLI::App* train = app.add_subcommand("train", "fit the reference classifier");
  add_common(train);
  train->add_option_function<std::string>("--train-dataset", set("train_dataset"), "JSONL training data");
  train->add_option_function<std::string>("--vocab", set("vocab"), "token list, one per line");
  train->add_option_function<std::size_t>("--embed-dim", set_training("embed_dim"), "embedding width");
  train->add_option_function<std::size_t>("--hidden-dim", set_training("hidden_dim"), "hidden width");
  train->add_option_function<std::size_t>("--epochs", set_training("epochs"), "training epochs");
  train->add_option_function<std::size_t>("--batch-size", set_training("batch_size"), "minibatch size");
  train->add_option_function<double>("--learning-rate", set_training("learning_rate"), "step size");
  train->add_option_function<double>("--embedding-init", set_training("embedding_init"),
                                     "embedding init half-width");

  CLI::App* attack = app.add_subcommand("attack", "run the geometry attack and measure");
  add_common(attack);
  attack->add_option_function<std::string>("--endpoint", set("endpoint"), "bridge host:port");
  attack->add_option_function<std::string>("--embedding-table", set("embedding_table"),
                                           "external embedding file");
  attack->add_option_function<double>("--epsilon", set("epsilon"), "min cosine to the original word");
  attack->add_option_function<std::size_t>("--pool-size", set("pool_size"), "neighbors per word");
  attack->add_option_function<std::size_t>("--max-cycles", set("max_cycles"), "iteration cap");
  attack->add_option_function<double>("--budget", set("budget"), "max share of words replaced");
  attack->add_option_function<bool>("--require-loss-increase", set("require_loss_increase"),
                                    "accept a swap only if the loss rises");
  attack->add_option_function<double>("--timeout-seconds", set("timeout_seconds"), "bridge timeout");

  std::vector<std::string> report_paths;
  CLI::App* report = app.add_subcommand("report", "merge structured reports into one table");
  report->add_option("reports", report_paths, "structured report files");

  SyntheticSpec spec;
  std::string synth_dir = "synthetic";
  CLI::App* synth = app.add_subcommand("synth", "write a seeded synthetic corpus and config");
  synth->add_option("--output-dir", synth_dir, "output directory");
  synth->add_option("--train-size", spec.train_size, "training samples");
  synth->add_option("--test-size", spec.test_size, "test samples");
  synth->add_option("--vocab-size", spec.vocab_size, "lexicon size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (report->parsed()) {
      cmd_report({report_paths.begin(), report_paths.end()}, out);
      return kExitOk;
    }
    if (synth->parsed()) {
      if (overrides.contains("seed")) spec.seed = overrides["seed"].get<std::uint64_t>();
      cmd_synth(spec, synth_dir, out);
      return kExitOk;
    }
    std::optional<fs::path> config_path;
    if (config_file) config_path = *config_file;
    const RunConfig config = resolve_config(config_path, overrides);
    if (train->parsed()) cmd_train(config, out);
    else cmd_attack(config, out);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace geoprobe::cli
