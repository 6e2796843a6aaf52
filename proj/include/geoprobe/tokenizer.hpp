#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace geoprobe {

inline constexpr std::string_view kUnknownToken = "[UNK]";

/// Token vocabulary with greedy longest-match sub-word segmentation.
/// Id 0 is always the reserved unknown token.
class Vocabulary {
 public:
  Vocabulary();
  /// `tokens` must not contain duplicates; kUnknownToken is inserted at id 0
  /// when absent and moved there when present elsewhere.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  int id_of(std::string_view token) const;  // -1 when absent
  int unknown_id() const noexcept { return 0; }

  /// Segments one whitespace-free word. A word that cannot be covered by
  /// vocabulary pieces maps to a single unknown id.
  std::vector<int> encode_word(std::string_view word) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  std::size_t longest_ = 0;
};

std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words);

}  // namespace geoprobe
