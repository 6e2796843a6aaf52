#include "geoprobe/classifier.hpp"

#include "geoprobe/error.hpp"
#include "geoprobe/tokenizer.hpp"

namespace geoprobe {

void validate_spans(const TokenizedInput& input) {
  if (input.spans.size() != input.words.size()) {
    throw Error(ErrorCode::ProtocolError,
                std::to_string(input.spans.size()) + " spans for " +
                    std::to_string(input.words.size()) + " words");
  }
  std::size_t next = 0;
  for (std::size_t w = 0; w < input.spans.size(); ++w) {
    const TokenSpan& s = input.spans[w];
    if (s.begin != next || s.end <= s.begin) {
      throw Error(ErrorCode::ProtocolError, "span of word " + std::to_string(w) +
                                                " does not continue the partition");
    }
    next = s.end;
  }
  if (next != input.token_ids.size()) {
    throw Error(ErrorCode::ProtocolError, "spans do not cover all tokens");
  }
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label) + " with " +
                                                std::to_string(logits.size()) + " labels");
  }
  return log_sum_exp(logits) - logits[label];
}

TokenizedInput retokenize(ModelSession& session, const TokenizedInput& input,
                          const std::vector<std::string>& words) {
  return session.tokenize(input.prompt, join_words(words));
}

}  // namespace geoprobe
