#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "geoprobe/classifier.hpp"

namespace geoprobe {

inline constexpr int kBridgeProtocolVersion = 1;

/// Parsed `info` reply.
struct BridgeInfo {
  int protocol_version = 0;
  std::size_t label_count = 0;
  std::size_t embed_dim = 0;
  std::size_t vocab_size = 0;
  std::vector<std::string> capabilities;
  std::string model_tag;
  int max_concurrency = 1;
};

struct RemoteOptions {
  double timeout_seconds = 30.0;
  // Where the server is asked to write its embedding export. Empty means a
  // file under the system temp directory.
  std::filesystem::path export_path;
  // Client-side re-derivation tolerance for forward.loss.
  double loss_tolerance = 1e-6;
};

/// Session proxied over the bridge wire protocol (HTTP, one POST endpoint per
/// op, JSON bodies). `endpoint` is `host:port` or `http://host:port`.
/// Throws ConnectFailed, ProtocolVersionMismatch or CapabilityMissing.
std::unique_ptr<ModelSession> open_remote_session(const std::string& endpoint,
                                                  const RemoteOptions& options = {});

/// The `info` reply of an open remote session.
const BridgeInfo& remote_info(const ModelSession& session);

}  // namespace geoprobe
