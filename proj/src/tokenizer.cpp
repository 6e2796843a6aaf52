#include "geoprobe/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace geoprobe {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  tokens_.reserve(tokens.size() + 1);
  tokens_.emplace_back(kUnknownToken);
  for (const auto& t : tokens) {
    if (t == kUnknownToken) continue;
    tokens_.push_back(t);
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw std::invalid_argument("empty vocabulary token");
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary token: " + tokens_[i]);
    }
    longest_ = std::max(longest_, tokens_[i].size());
  }
}

int Vocabulary::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? -1 : it->second;
}

std::vector<int> Vocabulary::encode_word(std::string_view word) const {
  std::vector<int> pieces;
  std::size_t pos = 0;
  while (pos < word.size()) {
    int found = -1;
    std::size_t found_len = 0;
    for (std::size_t len = std::min(longest_, word.size() - pos); len > 0; --len) {
      int id = id_of(word.substr(pos, len));
      if (id > 0) {
        found = id;
        found_len = len;
        break;
      }
    }
    if (found < 0) return {unknown_id()};
    pieces.push_back(found);
    pos += found_len;
  }
  return pieces;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace geoprobe
