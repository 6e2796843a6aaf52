#include "geoprobe/synthetic.hpp"

#include <stdexcept>
#include <unordered_set>

#include "geoprobe/rng.hpp"

namespace geoprobe {
namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                   "s", "t", "v", "z", "br", "dr", "gl", "pl", "st", "tr"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ea"};

std::string pseudo_word(Rng& rng) {
  const auto syllables = 2 + rng.below(2);
  std::string w;
  for (std::uint64_t s = 0; s < syllables; ++s) {
    w += kOnsets[rng.below(std::size(kOnsets))];
    w += kVowels[rng.below(std::size(kVowels))];
  }
  if (rng.below(2)) w += kOnsets[rng.below(10)];
  return w;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  const std::size_t n_keywords = 2 * spec.keywords_per_label;
  if (spec.vocab_size <= n_keywords || spec.min_length == 0 || spec.min_length > spec.max_length ||
      spec.min_keywords == 0 || spec.min_keywords > spec.max_keywords ||
      spec.max_keywords > spec.min_length) {
    throw std::invalid_argument("inconsistent synthetic corpus spec");
  }
  Rng rng(spec.seed);
  SyntheticCorpus corpus;
  std::unordered_set<std::string> seen;
  while (corpus.lexicon.size() < spec.vocab_size) {
    std::string w = pseudo_word(rng);
    if (seen.insert(w).second) corpus.lexicon.push_back(std::move(w));
  }
  corpus.keyword_pools.resize(2);
  for (std::size_t i = 0; i < n_keywords; ++i) {
    corpus.keyword_pools[i / spec.keywords_per_label].push_back(corpus.lexicon[i]);
  }
  const std::size_t n_filler = spec.vocab_size - n_keywords;

  auto sample = [&](std::size_t label) {
    const std::size_t length = spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
    const std::size_t keywords = spec.min_keywords + rng.below(spec.max_keywords - spec.min_keywords + 1);
    std::vector<std::string> words(length);
    for (auto& w : words) w = corpus.lexicon[n_keywords + rng.below(n_filler)];
    // Keywords land on distinct random positions.
    std::vector<std::size_t> slots(length);
    for (std::size_t i = 0; i < length; ++i) slots[i] = i;
    rng.shuffle(slots);
    const auto& pool = corpus.keyword_pools[label];
    for (std::size_t k = 0; k < keywords; ++k) words[slots[k]] = pool[rng.below(pool.size())];
    return LabeledText{join_words(words), label};
  };
  for (std::size_t i = 0; i < spec.train_size; ++i) corpus.train.push_back(sample(rng.below(2)));
  for (std::size_t i = 0; i < spec.test_size; ++i) corpus.test.push_back(sample(rng.below(2)));

  corpus.manifest.name = "synthetic-keywords";
  corpus.manifest.label_names = {"negative", "positive"};
  corpus.manifest.declared_counts = DeclaredCounts{spec.train_size, spec.test_size};
  corpus.manifest.avg_length = 0.5 * static_cast<double>(spec.min_length + spec.max_length);
  corpus.manifest.prompt_template = "classify the sentiment : {text}";
  return corpus;
}

}  // namespace geoprobe
