#include "geoprobe/embedding_store.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "geoprobe/error.hpp"

namespace geoprobe {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_count(std::string_view token, std::size_t& out) {
  if (token.empty()) return false;
  std::size_t value = 0;
  for (char c : token) {
    if (c < '0' || c > '9') return false;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  out = value;
  return true;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<std::string> words,
                               const std::vector<Vector>& vectors)
    : dim_(dim), words_(std::move(words)) {
  if (dim_ == 0) throw Error(ErrorCode::MalformedHeader, "dimension must be positive");
  if (vectors.size() != words_.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(words_.size()) + " words but " +
                    std::to_string(vectors.size()) + " vectors");
  }
  data_.reserve(words_.size() * dim_);
  norms_.reserve(words_.size());
  index_.reserve(words_.size());
  for (std::size_t row = 0; row < words_.size(); ++row) {
    const Vector& v = vectors[row];
    if (v.size() != dim_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "row " + std::to_string(row) + " has " + std::to_string(v.size()) +
                      " values, expected " + std::to_string(dim_));
    }
    for (double x : v) {
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(row));
      }
    }
    if (!index_.emplace(words_[row], row).second) {
      throw Error(ErrorCode::DuplicateWord, words_[row]);
    }
    data_.insert(data_.end(), v.begin(), v.end());
    norms_.push_back(l2_norm(v));
  }
}

std::span<const double> EmbeddingTable::vector(std::size_t row) const {
  if (row >= words_.size()) throw std::out_of_range("embedding row");
  return {data_.data() + row * dim_, dim_};
}

std::optional<std::size_t> EmbeddingTable::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingTable::vector_of(std::string_view word) const {
  auto row = lookup(word);
  if (!row) throw Error(ErrorCode::WordNotInTable, std::string(word));
  return vector(*row);
}

void EmbeddingTable::write(std::ostream& out) const {
  out << words_.size() << ' ' << dim_ << '\n';
  for (std::size_t row = 0; row < words_.size(); ++row) {
    out << words_[row];
    for (double x : vector(row)) out << ' ' << format_real(x);
    out << '\n';
  }
}

EmbeddingTable read_table_block(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "empty input");
  auto header = split_ws(line);
  std::size_t vocab = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_count(header[0], vocab) ||
      !parse_count(header[1], dim) || dim == 0) {
    throw Error(ErrorCode::MalformedHeader, "expected `V D`, got `" + line + "`");
  }

  std::vector<std::string> words;
  std::vector<Vector> vectors;
  words.reserve(vocab);
  vectors.reserve(vocab);
  std::unordered_set<std::string> seen;
  while (words.size() < vocab && std::getline(in, line)) {
    const std::size_t row = words.size();
    auto tokens = split_ws(line);
    if (tokens.size() != dim + 1) {
      throw Error(ErrorCode::DimensionMismatch,
                  "row " + std::to_string(row) + " has " +
                      std::to_string(tokens.empty() ? 0 : tokens.size() - 1) +
                      " values, expected " + std::to_string(dim));
    }
    std::string word(tokens[0]);
    if (!seen.insert(word).second) throw Error(ErrorCode::DuplicateWord, word);
    Vector v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_real(tokens[k + 1], v[k])) {
        throw Error(ErrorCode::DimensionMismatch,
                    "row " + std::to_string(row) + " value `" +
                        std::string(tokens[k + 1]) + "` is not a real");
      }
      if (!std::isfinite(v[k])) {
        throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(row));
      }
    }
    words.push_back(std::move(word));
    vectors.push_back(std::move(v));
  }
  // A file cut short at a row boundary is reported like a short row.
  if (words.size() != vocab) {
    throw Error(ErrorCode::DimensionMismatch,
                "header declares " + std::to_string(vocab) + " rows, found " +
                    std::to_string(words.size()));
  }
  return EmbeddingTable(dim, std::move(words), vectors);
}

EmbeddingTable parse_table(std::istream& in) {
  EmbeddingTable table = read_table_block(in);
  std::string line;
  while (std::getline(in, line)) {
    if (!split_ws(line).empty()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "header declares " + std::to_string(table.size()) + " rows, found more");
    }
  }
  return table;
}

EmbeddingTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_table(in);
}

void save_table(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  table.write(out);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorCode::ZeroNormVector, "cosine");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

std::vector<NeighborHit> nearest_neighbors(const EmbeddingTable& table,
                                           std::span<const double> query,
                                           std::size_t pool_size,
                                           const std::unordered_set<std::string>& exclude) {
  if (query.size() != table.dim()) {
    throw Error(ErrorCode::LengthMismatch,
                "query length " + std::to_string(query.size()) + ", table dim " +
                    std::to_string(table.dim()));
  }
  const double qnorm = l2_norm(query);
  if (qnorm == 0.0) throw Error(ErrorCode::ZeroNormVector, "query");
  if (pool_size == 0) return {};

  struct Scored {
    std::size_t row;
    double sim;
  };
  std::vector<Scored> scored;
  scored.reserve(table.size());
  for (std::size_t row = 0; row < table.size(); ++row) {
    const double rnorm = table.norm(row);
    if (rnorm == 0.0 || exclude.contains(table.word(row))) continue;
    // Same expression as cosine() so rankings agree with it bit-for-bit.
    const double sim = std::clamp(dot(query, table.vector(row)) / (qnorm * rnorm), -1.0, 1.0);
    scored.push_back({row, sim});
  }
  const std::size_t keep = std::min(pool_size, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), [](const Scored& a, const Scored& b) {
                      if (a.sim != b.sim) return a.sim > b.sim;
                      return a.row < b.row;
                    });
  std::vector<NeighborHit> hits;
  hits.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    auto v = table.vector(scored[i].row);
    hits.push_back({table.word(scored[i].row), scored[i].sim, Vector(v.begin(), v.end())});
  }
  return hits;
}

}  // namespace geoprobe
