#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geoprobe {

enum class ErrorCode {
  // embedding_store
  MalformedHeader,
  DimensionMismatch,
  DuplicateWord,
  NonFiniteValue,
  ZeroNormVector,
  LengthMismatch,
  // classifier
  EmptyText,
  LabelOutOfRange,
  SessionClosed,
  CapabilityMissing,
  EmptyCorpus,
  ConnectFailed,
  ProtocolVersionMismatch,
  ProtocolError,
  RemoteError,
  MalformedCheckpoint,
  // attack
  DegenerateGradient,
  DegenerateGeometry,
  WordNotInTable,
  NoCandidates,
  // harness
  MalformedRecord,
  EmptyDataset,
  InvalidCounts,
  MalformedManifest,
  MalformedReport,
  IoError,
  // cli
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (the attack loop, the CLI exit-code map) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace geoprobe
