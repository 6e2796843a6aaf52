#include "geoprobe/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "geoprobe/error.hpp"

namespace geoprobe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateWord: return "DuplicateWord";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ZeroNormVector: return "ZeroNormVector";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::SessionClosed: return "SessionClosed";
    case ErrorCode::CapabilityMissing: return "CapabilityMissing";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::ConnectFailed: return "ConnectFailed";
    case ErrorCode::ProtocolVersionMismatch: return "ProtocolVersionMismatch";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::RemoteError: return "RemoteError";
    case ErrorCode::MalformedCheckpoint: return "MalformedCheckpoint";
    case ErrorCode::DegenerateGradient: return "DegenerateGradient";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::WordNotInTable: return "WordNotInTable";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::MalformedReport: return "MalformedReport";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "vectors of length " + std::to_string(u.size()) + " and " +
                    std::to_string(v.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return sum;
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

std::string format_real(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

bool parse_real(std::string_view token, double& out) {
  if (token.empty()) return false;
  const char* first = token.data();
  const char* last = first + token.size();
  // from_chars rejects a leading '+', which some writers emit.
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - m);
  return m + std::log(sum);
}

std::size_t argmax(std::span<const double> x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

}  // namespace geoprobe
