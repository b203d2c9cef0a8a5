#pragma once

// User-authority scores and the Q&A-pair quality feature.

#include <cstdint>

#include "cqr/corpus.hpp"

namespace cqr {

// Square root of the best-answer count saturates at this value.
inline constexpr double kAuthorityCap = 20.0;

// min(sqrt(best_answer_count), 20) / 20, in [0, 1].
double authority_score(std::uint64_t best_answer_count);

struct QualityFeature {
  double s_asker = 0.0;
  double s_answerer = 0.0;

  double mean() const { return 0.5 * (s_asker + s_answerer); }
};

// Unknown users count as zero best answers.
QualityFeature quality_feature(const QAPair& qa, const Corpus& corpus);

}  // namespace cqr
