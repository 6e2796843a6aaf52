#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "geoprobe/numeric.hpp"

namespace geoprobe {

/// Immutable word -> vector map. Rows keep file order; the row index is the
/// tie-breaker for every similarity ranking.
///
/// Text format: a header line `V D`, then V lines `word f_1 ... f_D`.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  /// Builds a table from parallel word/vector lists. Throws DuplicateWord,
  /// DimensionMismatch or NonFiniteValue.
  EmbeddingTable(std::size_t dim, std::vector<std::string> words,
                 const std::vector<Vector>& vectors);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }

  const std::string& word(std::size_t row) const { return words_.at(row); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  std::span<const double> vector(std::size_t row) const;
  double norm(std::size_t row) const { return norms_.at(row); }

  std::optional<std::size_t> lookup(std::string_view word) const;

  /// Throws WordNotInTable.
  std::span<const double> vector_of(std::string_view word) const;

  void write(std::ostream& out) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Whole-stream parse; anything but blank lines after the declared rows is an error.
EmbeddingTable parse_table(std::istream& in);
/// Reads the header and the declared rows, leaving the stream just past them.
EmbeddingTable read_table_block(std::istream& in);
EmbeddingTable load_table(const std::filesystem::path& path);
void save_table(const EmbeddingTable& table, const std::filesystem::path& path);

/// u.v / (|u||v|). Throws LengthMismatch or ZeroNormVector.
double cosine(std::span<const double> u, std::span<const double> v);

struct NeighborHit {
  std::string word;
  double similarity = 0.0;
  Vector vector;
};

/// Exhaustive cosine scan. Rows with zero norm have no defined similarity and
/// are never returned.
std::vector<NeighborHit> nearest_neighbors(
    const EmbeddingTable& table, std::span<const double> query,
    std::size_t pool_size, const std::unordered_set<std::string>& exclude = {});

}  // namespace geoprobe
