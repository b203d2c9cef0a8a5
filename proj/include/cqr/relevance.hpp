#pragma once

// Question-relevance scorers: query-likelihood LM, translation LM, the topic
// translation model, its query-topic-weighted variant, and the four log-domain
// relevance features fed to the ranker.
//
// Every scorer works per query token (duplicates contribute once per
// occurrence) and returns a sum of logs. Per-token probabilities are blended
// with the collection background: (1 - lambda) * p + lambda * P(w|C), with
// lambda = 1 / (|doc| + 1).

#include <functional>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "cqr/corpus.hpp"
#include "cqr/index.hpp"
#include "cqr/topics.hpp"
#include "cqr/translation.hpp"

namespace cqr {

struct MixtureWeights {
  double mu1 = 0.3;  // exact match against the question
  double mu2 = 0.3;  // translation from question terms
  double mu3 = 0.2;  // topic-space association with question terms
  double mu4 = 0.2;  // exact match against the answer

  // Throws unless every weight lies in [0,1] and they sum to 1 within 1e-12.
  void validate() const;
};

class TermWeightVector {
 public:
  TermWeightVector() = default;
  explicit TermWeightVector(std::map<TermId, double> weights) : weights_(std::move(weights)) {}

  // Same value for every distinct query term; used for ablations and the
  // reduction to the unweighted model.
  static TermWeightVector constant(std::span<const TermId> query, double value);

  // Weight of a query term; 1 for terms not in the vector.
  double weight(TermId w) const;
  const std::map<TermId, double>& values() const { return weights_; }
  double sum() const;

 private:
  std::map<TermId, double> weights_;
};

// Entropy-based query term weights:
//   W(w) = H(w) / sum_{distinct t in query} H(t),
//   H(w) = -sum_i theta_i P(w|z_i) ln P(w|z_i).
// With rescale = true every weight is multiplied by the number of distinct
// query terms (mean-one scaling).
TermWeightVector term_weights(const TopicModel& model, const QueryTopicPosterior& theta,
                              std::span<const TermId> query, bool rescale = false);

enum class Smoothing { collection, none };

inline double smoothing_lambda(std::size_t doc_length) {
  return 1.0 / (static_cast<double>(doc_length) + 1.0);
}

// Unsmoothed per-token evidence for one query word against one Q&A pair.
struct TermComponents {
  double exact = 0.0;        // P_ml(w|q)
  double translation = 0.0;  // sum_t P_tr(w|t) P_ml(t|q)
  double topic = 0.0;        // sum_t (sum_i theta_i P(w|z_i) P(t|z_i)) P_ml(t|q)
  double answer = 0.0;       // P_ml(w|a), 0 for an empty answer
};

// mu1 * W * exact + mu2 * translation + mu3 * topic + mu4 * W * answer
double mix_probability(const TermComponents& c, const MixtureWeights& mu, double weight);

struct RelevanceFeatures {
  double f1 = 0.0;  // weighted question LM
  double f2 = 0.0;  // question translation model
  double f3 = 0.0;  // query-topic-weighted topic model
  double f4 = 0.0;  // weighted answer LM
};

double score_lm(std::span<const TermId> query, std::span<const TermId> question,
                const CollectionStats& stats);

double score_tlm(std::span<const TermId> query, std::span<const TermId> question,
                 const TranslationTable& table, const CollectionStats& stats);

double score_t2lm(std::span<const TermId> query, const QAPair& qa, const MixtureWeights& mu,
                  const TranslationTable& table, const TopicModel& model,
                  const CollectionStats& stats, Smoothing smoothing = Smoothing::collection);

// theta is taken as a raw length-K vector so the all-ones injection can
// reproduce the unweighted topic term exactly.
double score_t2lm_plus(std::span<const TermId> query, const QAPair& qa, const MixtureWeights& mu,
                       const TranslationTable& table, const TopicModel& model,
                       std::span<const double> theta, const TermWeightVector& weights,
                       const CollectionStats& stats, Smoothing smoothing = Smoothing::collection);

RelevanceFeatures features_f1_f4(std::span<const TermId> query, const QAPair& qa,
                                 const TranslationTable& table, const TopicModel& model,
                                 std::span<const double> theta, const TermWeightVector& weights,
                                 const CollectionStats& stats);

// Rescores candidates (doc = corpus pair index) and orders them by
// non-increasing score, ties by ascending qa_id.
using CandidateScorer = std::function<double(const QAPair&)>;
std::vector<ScoredCandidate> rank_candidates(const CandidateScorer& scorer, const Corpus& corpus,
                                             std::vector<ScoredCandidate> candidates);

enum class Method { vsm, bm25, lm, tlm, t2lm, t2lm_plus };
Method parse_method(std::string_view name);
std::string_view method_name(Method m);

struct RelevanceConfig {
  MixtureWeights mu;
  bool rescale_weights = false;
  FoldInOptions fold_in;
  Bm25Params bm25;
};

// Bundles the trained models so one query's posterior, weights and topic
// vectors are computed once and reused across its candidates.
class RelevanceModel {
 public:
  RelevanceModel(const Corpus& corpus, const InvertedIndex& index, const TranslationTable& table,
                 const TopicModel& model, RelevanceConfig config);

  struct PreparedQuery {
    TokenSeq tokens;
    QueryTopicPosterior theta;
    TermWeightVector weights;
  };

  // With an empty topic model (zero topics) only the lexical methods
  // (vsm, bm25, lm, tlm) may be scored.
  PreparedQuery prepare(std::span<const TermId> query) const;
  double score(Method method, const PreparedQuery& query, std::size_t doc) const;
  RelevanceFeatures features(const PreparedQuery& query, std::size_t doc) const;

  const RelevanceConfig& config() const { return config_; }

 private:
  const Corpus& corpus_;
  const InvertedIndex& index_;
  const TranslationTable& table_;
  const TopicModel& model_;
  RelevanceConfig config_;
};

}  // namespace cqr
