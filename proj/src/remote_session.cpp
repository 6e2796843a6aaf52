#include "geoprobe/remote_session.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <unistd.h>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "geoprobe/error.hpp"

namespace geoprobe {
namespace {

using nlohmann::json;

struct Endpoint {
  std::string host;
  int port = 0;
};

Endpoint parse_endpoint(const std::string& endpoint) {
  std::string rest = endpoint;
  if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
    throw Error(ErrorCode::ConnectFailed, "endpoint `" + endpoint + "` is not host:port");
  }
  Endpoint ep;
  ep.host = rest.substr(0, colon);
  try {
    std::size_t used = 0;
    ep.port = std::stoi(rest.substr(colon + 1), &used);
    if (used != rest.size() - colon - 1 || ep.port <= 0 || ep.port > 65535) throw std::out_of_range("port");
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConnectFailed, "endpoint `" + endpoint + "` has a bad port");
  }
  return ep;
}

ErrorCode remote_code(const std::string& name) {
  static const ErrorCode known[] = {
      ErrorCode::EmptyText,         ErrorCode::LabelOutOfRange,
      ErrorCode::CapabilityMissing, ErrorCode::SessionClosed,
      ErrorCode::IoError,           ErrorCode::ProtocolError,
  };
  for (ErrorCode c : known) {
    if (to_string(c) == name) return c;
  }
  return ErrorCode::RemoteError;
}

std::filesystem::path default_export_path() {
  static std::atomic<unsigned> counter{0};
  return std::filesystem::temp_directory_path() /
         ("geoprobe-export-" + std::to_string(::getpid()) + "-" +
          std::to_string(counter.fetch_add(1)) + ".txt");
}

template <typename T>
T field(const json& body, const char* name) {
  if (!body.contains(name)) throw Error(ErrorCode::ProtocolError, std::string("reply lacks `") + name + "`");
  try {
    return body.at(name).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("bad `") + name + "`: " + e.what());
  }
}

class RemoteSession : public ModelSession {
 public:
  RemoteSession(const std::string& endpoint, const RemoteOptions& options)
      : options_(options) {
    Endpoint ep = parse_endpoint(endpoint);
    client_ = std::make_unique<httplib::Client>(ep.host, ep.port);
    const auto secs = static_cast<time_t>(options.timeout_seconds);
    const auto usecs = static_cast<time_t>((options.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client_->set_connection_timeout(secs, usecs);
    client_->set_read_timeout(secs, usecs);
    client_->set_write_timeout(secs, usecs);
    client_->set_keep_alive(true);

    json reply = call("info", json::object());
    info_.protocol_version = field<int>(reply, "protocol_version");
    if (info_.protocol_version != kBridgeProtocolVersion) {
      throw Error(ErrorCode::ProtocolVersionMismatch,
                  "server speaks v" + std::to_string(info_.protocol_version) + ", client v" +
                      std::to_string(kBridgeProtocolVersion));
    }
    info_.label_count = field<std::size_t>(reply, "label_count");
    info_.embed_dim = field<std::size_t>(reply, "embed_dim");
    info_.vocab_size = field<std::size_t>(reply, "vocab_size");
    info_.capabilities = field<std::vector<std::string>>(reply, "capabilities");
    info_.model_tag = reply.value("model_tag", std::string());
    info_.max_concurrency = reply.value("max_concurrency", 1);
    if (info_.label_count < 2 || info_.embed_dim == 0) {
      throw Error(ErrorCode::ProtocolError, "info reports label_count < 2 or embed_dim 0");
    }
    if (!has("forward")) throw Error(ErrorCode::CapabilityMissing, "server lacks forward");
    spdlog::debug("bridge {}: labels={} dim={} tag={}", endpoint, info_.label_count,
                  info_.embed_dim, info_.model_tag);
  }

  const BridgeInfo& info() const { return info_; }

  std::size_t label_count() const override { return info_.label_count; }
  std::size_t embed_dim() const override { return info_.embed_dim; }
  Capabilities capabilities() const override {
    return {has("forward"), has("grad"), has("export_embeddings")};
  }

  TokenizedInput tokenize(std::string_view prompt, std::string_view text) override {
    ensure_open();
    json reply = call("encode", {{"prompt", std::string(prompt)}, {"text", std::string(text)}});
    TokenizedInput out;
    out.prompt = std::string(prompt);
    out.words = field<std::vector<std::string>>(reply, "words");
    out.token_ids = field<std::vector<int>>(reply, "token_ids");
    out.prompt_ids = reply.value("prompt_ids", std::vector<int>{});
    for (const auto& pair : field<std::vector<std::vector<std::size_t>>>(reply, "spans")) {
      if (pair.size() != 2) throw Error(ErrorCode::ProtocolError, "span is not [begin, end]");
      out.spans.push_back({pair[0], pair[1]});
    }
    if (out.words.empty()) throw Error(ErrorCode::EmptyText, "text has no words");
    validate_spans(out);
    return out;
  }

  ForwardOutput forward(const TokenizedInput& input, std::size_t label) override {
    ensure_open();
    check_label(label);
    json reply = call("forward", {{"token_ids", full_sequence(input)}, {"label", label}});
    ForwardOutput out;
    out.logits = field<Vector>(reply, "logits");
    out.loss = field<double>(reply, "loss");
    out.predicted = field<std::size_t>(reply, "predicted");
    check_logits(out.logits, out.loss, label);
    if (out.predicted != argmax(out.logits)) {
      throw Error(ErrorCode::ProtocolError, "predicted label is not the argmax of logits");
    }
    return out;
  }

  EmbeddingGradient grad_wrt_embeddings(const TokenizedInput& input, std::size_t label) override {
    ensure_open();
    if (!has("grad")) throw Error(ErrorCode::CapabilityMissing, "server lacks grad");
    check_label(label);
    auto ids = full_sequence(input);
    json reply = call("grad", {{"token_ids", ids}, {"label", label}});
    EmbeddingGradient out;
    out.per_token = field<std::vector<Vector>>(reply, "grad");
    out.loss = field<double>(reply, "loss");
    out.logits = field<Vector>(reply, "logits");
    check_logits(out.logits, out.loss, label);
    if (out.per_token.size() != ids.size()) {
      throw Error(ErrorCode::ProtocolError, "grad has " + std::to_string(out.per_token.size()) +
                                                " rows for " + std::to_string(ids.size()) + " tokens");
    }
    for (const auto& row : out.per_token) {
      if (row.size() != info_.embed_dim) throw Error(ErrorCode::ProtocolError, "grad row has wrong width");
      for (double v : row) {
        if (!std::isfinite(v)) throw Error(ErrorCode::ProtocolError, "non-finite gradient");
      }
    }
    out.per_token.erase(out.per_token.begin(),
                        out.per_token.begin() + static_cast<std::ptrdiff_t>(input.prompt_ids.size()));
    return out;
  }

  EmbeddingTable export_embeddings() override {
    ensure_open();
    if (!has("export_embeddings")) throw Error(ErrorCode::CapabilityMissing, "server lacks export_embeddings");
    const auto path = options_.export_path.empty() ? default_export_path() : options_.export_path;
    json reply = call("export_embeddings", {{"path", path.string()}});
    const auto written = field<std::size_t>(reply, "written");
    EmbeddingTable table = load_table(path);
    if (table.size() != written || table.dim() != info_.embed_dim) {
      throw Error(ErrorCode::ProtocolError, "exported table disagrees with the server's reply");
    }
    return table;
  }

  void close() override {
    closed_ = true;
    client_->stop();
  }

 private:
  bool has(const std::string& cap) const {
    return std::find(info_.capabilities.begin(), info_.capabilities.end(), cap) !=
           info_.capabilities.end();
  }

  void ensure_open() const {
    if (closed_) throw Error(ErrorCode::SessionClosed, "remote session");
  }

  void check_label(std::size_t label) const {
    if (label >= info_.label_count) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
    }
  }

  void check_logits(const Vector& logits, double loss, std::size_t label) const {
    if (logits.size() != info_.label_count) {
      throw Error(ErrorCode::ProtocolError, "expected " + std::to_string(info_.label_count) + " logits");
    }
    const double derived = cross_entropy(logits, label);
    if (!(std::abs(derived - loss) <= options_.loss_tolerance)) {
      throw Error(ErrorCode::ProtocolError, "server loss disagrees with its logits");
    }
  }

  static std::vector<int> full_sequence(const TokenizedInput& input) {
    std::vector<int> ids = input.prompt_ids;
    ids.insert(ids.end(), input.token_ids.begin(), input.token_ids.end());
    return ids;
  }

  json call(const std::string& op, const json& body) {
    auto res = client_->Post("/" + op, body.dump(), "application/json");
    if (!res) {
      throw Error(ErrorCode::ConnectFailed,
                  "/" + op + ": " + httplib::to_string(res.error()));
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ProtocolError, "/" + op + " reply is not JSON: " + e.what());
    }
    if (reply.is_object() && reply.contains("error")) {
      const auto code = reply["error"].is_string() ? reply["error"].get<std::string>() : "unknown";
      throw Error(remote_code(code), "/" + op + ": " + code + ": " + reply.value("message", std::string()));
    }
    if (res->status != 200 || !reply.is_object()) {
      throw Error(ErrorCode::ProtocolError, "/" + op + " returned HTTP " + std::to_string(res->status));
    }
    return reply;
  }

  RemoteOptions options_;
  std::unique_ptr<httplib::Client> client_;
  BridgeInfo info_;
  bool closed_ = false;
};

}  // namespace

std::unique_ptr<ModelSession> open_remote_session(const std::string& endpoint,
                                                  const RemoteOptions& options) {
  return std::make_unique<RemoteSession>(endpoint, options);
}

const BridgeInfo& remote_info(const ModelSession& session) {
  auto* remote = dynamic_cast<const RemoteSession*>(&session);
  if (!remote) throw std::invalid_argument("not a remote session");
  return remote->info();
}

}  // namespace geoprobe
