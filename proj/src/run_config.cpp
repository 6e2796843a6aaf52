#include "geoprobe/run_config.hpp"

#include <fstream>
#include <thread>

#include "geoprobe/error.hpp"

namespace geoprobe {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string("field `") + key + "` has the wrong type");
  }
}

template <typename T>
void optional_field(const json& doc, const char* key, std::optional<T>& out) {
  if (!doc.contains(key)) return;
  if (doc[key].is_null()) {
    out.reset();
  } else {
    out = field<std::string>(doc, key);
  }
}

void apply_training(TrainingSettings& t, const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "field `training` must be an object");
  for (const auto& [key, value] : doc.items()) {
    const std::string name = "training." + key;
    if (key == "embed_dim") t.embed_dim = field<std::size_t>(doc, "embed_dim");
    else if (key == "hidden_dim") t.hidden_dim = field<std::size_t>(doc, "hidden_dim");
    else if (key == "epochs") t.epochs = field<std::size_t>(doc, "epochs");
    else if (key == "batch_size") t.batch_size = field<std::size_t>(doc, "batch_size");
    else if (key == "learning_rate") t.learning_rate = field<double>(doc, "learning_rate");
    else if (key == "embedding_init") t.embedding_init = field<double>(doc, "embedding_init");
    else throw Error(ErrorCode::InvalidConfig, "unknown field `" + name + "`");
  }
}

}  // namespace

AttackConfig RunConfig::attack_config() const {
  AttackConfig c;
  c.epsilon = epsilon;
  c.pool_size = pool_size;
  c.max_cycles = max_cycles;
  c.budget_fraction = budget;
  c.seed = seed;
  c.require_loss_increase = require_loss_increase;
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.seed = seed;
  c.embed_dim = training.embed_dim;
  c.hidden_dim = training.hidden_dim;
  c.epochs = training.epochs;
  c.batch_size = training.batch_size;
  c.learning_rate = training.learning_rate;
  c.embedding_init = training.embedding_init;
  return c;
}

std::size_t RunConfig::resolved_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

json RunConfig::echo() const {
  return {{"epsilon", epsilon},
          {"pool_size", pool_size},
          {"max_cycles", max_cycles},
          {"budget", budget},
          {"require_loss_increase", require_loss_increase},
          {"seed", seed},
          {"model_source", checkpoint ? "checkpoint" : "endpoint"},
          {"embedding_table", embedding_table ? "external" : "model"},
          {"tags", tags}};
}

void apply_config_json(RunConfig& c, const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "checkpoint") {
      std::optional<std::string> s;
      optional_field(doc, "checkpoint", s);
      c.checkpoint = s ? std::optional<std::filesystem::path>(*s) : std::nullopt;
    } else if (key == "endpoint") {
      optional_field(doc, "endpoint", c.endpoint);
    } else if (key == "dataset" || key == "train_dataset" || key == "manifest" || key == "vocab" ||
               key == "embedding_table") {
      std::optional<std::string> s;
      optional_field(doc, key.c_str(), s);
      std::optional<std::filesystem::path> p;
      if (s) p = *s;
      if (key == "dataset") c.dataset = p;
      else if (key == "train_dataset") c.train_dataset = p;
      else if (key == "manifest") c.manifest = p;
      else if (key == "vocab") c.vocab = p;
      else c.embedding_table = p;
    } else if (key == "epsilon") {
      c.epsilon = field<double>(doc, "epsilon");
    } else if (key == "pool_size") {
      c.pool_size = field<std::size_t>(doc, "pool_size");
    } else if (key == "max_cycles") {
      c.max_cycles = field<std::size_t>(doc, "max_cycles");
    } else if (key == "budget") {
      c.budget = field<double>(doc, "budget");
    } else if (key == "require_loss_increase") {
      c.require_loss_increase = field<bool>(doc, "require_loss_increase");
    } else if (key == "output_dir") {
      c.output_dir = field<std::string>(doc, "output_dir");
    } else if (key == "seed") {
      c.seed = field<std::uint64_t>(doc, "seed");
    } else if (key == "workers") {
      c.workers = field<std::size_t>(doc, "workers");
    } else if (key == "timeout_seconds") {
      c.timeout_seconds = field<double>(doc, "timeout_seconds");
    } else if (key == "tags") {
      c.tags = field<std::vector<std::string>>(doc, "tags");
    } else if (key == "training") {
      apply_training(c.training, value);
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown field `" + key + "`");
    }
  }
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file,
                         const json& overrides) {
  RunConfig config;
  if (config_file) {
    std::ifstream in(*config_file);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + config_file->string());
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, config_file->string() + ": " + e.what());
    }
    apply_config_json(config, doc);
  }
  apply_config_json(config, overrides);
  return config;
}

json config_to_json(const RunConfig& c) {
  auto path_or_null = [](const std::optional<std::filesystem::path>& p) -> json {
    return p ? json(p->string()) : json(nullptr);
  };
  return {{"checkpoint", path_or_null(c.checkpoint)},
          {"endpoint", c.endpoint ? json(*c.endpoint) : json(nullptr)},
          {"dataset", path_or_null(c.dataset)},
          {"train_dataset", path_or_null(c.train_dataset)},
          {"manifest", path_or_null(c.manifest)},
          {"vocab", path_or_null(c.vocab)},
          {"embedding_table", path_or_null(c.embedding_table)},
          {"epsilon", c.epsilon},
          {"pool_size", c.pool_size},
          {"max_cycles", c.max_cycles},
          {"budget", c.budget},
          {"require_loss_increase", c.require_loss_increase},
          {"output_dir", c.output_dir.string()},
          {"seed", c.seed},
          {"workers", c.workers},
          {"timeout_seconds", c.timeout_seconds},
          {"tags", c.tags},
          {"training",
           {{"embed_dim", c.training.embed_dim},
            {"hidden_dim", c.training.hidden_dim},
            {"epochs", c.training.epochs},
            {"batch_size", c.training.batch_size},
            {"learning_rate", c.training.learning_rate},
            {"embedding_init", c.training.embedding_init}}}};
}

}  // namespace geoprobe
