#include "cqr/quality.hpp"

#include <algorithm>
#include <cmath>

namespace cqr {

double authority_score(std::uint64_t best_answer_count) {
  const double root = std::sqrt(static_cast<double>(best_answer_count));
  return std::min(root, kAuthorityCap) / kAuthorityCap;
}

QualityFeature quality_feature(const QAPair& qa, const Corpus& corpus) {
  return {authority_score(corpus.best_answers(qa.asker)),
          authority_score(corpus.best_answers(qa.answerer))};
}

}  // namespace cqr
