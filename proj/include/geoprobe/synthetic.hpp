#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoprobe/harness.hpp"
#include "geoprobe/reference_classifier.hpp"

namespace geoprobe {

/// Two-class keyword corpus: each label owns a pool of keywords, every
/// sentence mixes a few keywords of its label into filler drawn from the
/// rest of the lexicon.
struct SyntheticSpec {
  std::uint64_t seed = 7;
  std::size_t vocab_size = 5000;
  std::size_t train_size = 2000;
  std::size_t test_size = 500;
  std::size_t keywords_per_label = 40;
  std::size_t min_length = 16;
  std::size_t max_length = 24;
  std::size_t min_keywords = 1;
  std::size_t max_keywords = 3;
};

struct SyntheticCorpus {
  std::vector<std::string> lexicon;  // every word, keyword pools first
  std::vector<std::vector<std::string>> keyword_pools;  // one per label
  std::vector<LabeledText> train;
  std::vector<LabeledText> test;
  DatasetManifest manifest;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace geoprobe
