#include "cqr/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cqr/simd.hpp"

namespace cqr {
namespace {

// Distinct terms of a document with their counts, ascending by term id.
struct Bag {
  std::vector<TermId> terms;
  std::vector<double> counts;
  double length = 0.0;

  explicit Bag(std::span<const TermId> doc) : length(static_cast<double>(doc.size())) {
    std::vector<TermId> sorted(doc.begin(), doc.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      terms.push_back(sorted[i]);
      counts.push_back(static_cast<double>(j - i));
      i = j;
    }
  }

  double ml(TermId w) const {
    if (length == 0.0) return 0.0;
    auto it = std::lower_bound(terms.begin(), terms.end(), w);
    if (it == terms.end() || *it != w) return 0.0;
    return counts[static_cast<std::size_t>(it - terms.begin())] / length;
  }
};

double translation_sum(TermId w, const Bag& q, const TranslationTable& table) {
  double acc = 0.0;
  for (std::size_t i = 0; i < q.terms.size(); ++i) {
    acc += table.prob(w, q.terms[i]) * (q.counts[i] / q.length);
  }
  return acc;
}

// sum_t dot(query_vec, P(.|t)) * P_ml(t|q), query_vec = theta o P(w|.)
double topic_sum(std::span<const double> query_vec, const Bag& q, const TopicModel& model) {
  const auto& kern = simd::kernels();
  double acc = 0.0;
  for (std::size_t i = 0; i < q.terms.size(); ++i) {
    const auto col = model.word_column(q.terms[i]);
    acc += kern.dot(query_vec.data(), col.data(), col.size()) * (q.counts[i] / q.length);
  }
  return acc;
}

double smooth(double p, double lambda, double background) {
  return (1.0 - lambda) * p + lambda * background;
}

void require_question(std::span<const TermId> question) {
  if (question.empty()) throw std::invalid_argument("empty document");
}

void require_theta(std::span<const double> theta, const TopicModel& model) {
  if (theta.size() != model.topics()) {
    throw std::invalid_argument("topic posterior length does not match the topic model");
  }
}

// Per query token: theta o P(w|.) laid out contiguously.
std::vector<double> weighted_columns(std::span<const TermId> query, const TopicModel& model,
                                     std::span<const double> theta) {
  const std::size_t k = model.topics();
  std::vector<double> out(query.size() * k);
  const auto& kern = simd::kernels();
  for (std::size_t i = 0; i < query.size(); ++i) {
    kern.hadamard(theta.data(), model.word_column(query[i]).data(), out.data() + i * k, k);
  }
  return out;
}

double mixed_score(std::span<const TermId> query, const QAPair& qa, const MixtureWeights& mu,
                   const TranslationTable& table, const TopicModel& model,
                   const std::vector<double>* topic_vectors, const TermWeightVector* weights,
                   const CollectionStats& stats, Smoothing smoothing) {
  require_question(qa.question);
  mu.validate();
  const Bag q(qa.question);
  const Bag a(qa.answer);
  const double lambda = smoothing_lambda(qa.question.size());
  const std::size_t k = model.topics();
  double total = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const TermId w = query[i];
    TermComponents c;
    c.exact = q.ml(w);
    c.translation = translation_sum(w, q, table);
    c.topic = topic_vectors
                  ? topic_sum(std::span<const double>(*topic_vectors).subspan(i * k, k), q, model)
                  : topic_sum(model.word_column(w), q, model);
    c.answer = a.ml(w);
    const double weight = weights ? weights->weight(w) : 1.0;
    double p = mix_probability(c, mu, weight);
    if (smoothing == Smoothing::collection) p = smooth(p, lambda, collection_prob(w, stats));
    total += std::log(p);
  }
  return total;
}

}  // namespace

void MixtureWeights::validate() const {
  for (double m : {mu1, mu2, mu3, mu4}) {
    if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("mixture weight outside [0,1]");
  }
  if (std::abs(mu1 + mu2 + mu3 + mu4 - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
}

TermWeightVector TermWeightVector::constant(std::span<const TermId> query, double value) {
  std::map<TermId, double> w;
  for (TermId t : query) w[t] = value;
  return TermWeightVector(std::move(w));
}

double TermWeightVector::weight(TermId w) const {
  auto it = weights_.find(w);
  return it == weights_.end() ? 1.0 : it->second;
}

double TermWeightVector::sum() const {
  double s = 0.0;
  for (const auto& [_, v] : weights_) s += v;
  return s;
}

TermWeightVector term_weights(const TopicModel& model, const QueryTopicPosterior& theta,
                              std::span<const TermId> query, bool rescale) {
  if (query.empty()) throw std::invalid_argument("empty query");
  require_theta(theta.theta, model);
  std::map<TermId, double> info;
  for (TermId w : query) {
    if (info.contains(w)) continue;
    double h = 0.0;
    for (std::size_t z = 0; z < model.topics(); ++z) {
      const double p = model.prob(w, z);
      if (p > 0.0) h -= theta.theta[z] * p * std::log(p);
    }
    info.emplace(w, h);
  }
  double denom = 0.0;
  for (const auto& [_, h] : info) denom += h;
  if (!(denom > 0.0)) throw std::domain_error("degenerate topic model");
  const double scale = rescale ? static_cast<double>(info.size()) : 1.0;
  for (auto& [_, h] : info) h = h / denom * scale;
  return TermWeightVector(std::move(info));
}

double mix_probability(const TermComponents& c, const MixtureWeights& mu, double weight) {
  return mu.mu1 * weight * c.exact + mu.mu2 * c.translation + mu.mu3 * c.topic +
         mu.mu4 * weight * c.answer;
}

double score_lm(std::span<const TermId> query, std::span<const TermId> question,
                const CollectionStats& stats) {
  require_question(question);
  const Bag q(question);
  const double lambda = smoothing_lambda(question.size());
  double total = 0.0;
  for (TermId w : query) total += std::log(smooth(q.ml(w), lambda, collection_prob(w, stats)));
  return total;
}

double score_tlm(std::span<const TermId> query, std::span<const TermId> question,
                 const TranslationTable& table, const CollectionStats& stats) {
  require_question(question);
  const Bag q(question);
  const double lambda = smoothing_lambda(question.size());
  double total = 0.0;
  for (TermId w : query) {
    total += std::log(smooth(translation_sum(w, q, table), lambda, collection_prob(w, stats)));
  }
  return total;
}

double score_t2lm(std::span<const TermId> query, const QAPair& qa, const MixtureWeights& mu,
                  const TranslationTable& table, const TopicModel& model,
                  const CollectionStats& stats, Smoothing smoothing) {
  return mixed_score(query, qa, mu, table, model, nullptr, nullptr, stats, smoothing);
}

double score_t2lm_plus(std::span<const TermId> query, const QAPair& qa, const MixtureWeights& mu,
                       const TranslationTable& table, const TopicModel& model,
                       std::span<const double> theta, const TermWeightVector& weights,
                       const CollectionStats& stats, Smoothing smoothing) {
  require_theta(theta, model);
  const auto vectors = weighted_columns(query, model, theta);
  return mixed_score(query, qa, mu, table, model, &vectors, &weights, stats, smoothing);
}

RelevanceFeatures features_f1_f4(std::span<const TermId> query, const QAPair& qa,
                                 const TranslationTable& table, const TopicModel& model,
                                 std::span<const double> theta, const TermWeightVector& weights,
                                 const CollectionStats& stats) {
  require_question(qa.question);
  require_theta(theta, model);
  const Bag q(qa.question);
  const Bag a(qa.answer);
  const double lambda_q = smoothing_lambda(qa.question.size());
  const double lambda_a = qa.answer.empty() ? 1.0 : smoothing_lambda(qa.answer.size());
  const std::size_t k = model.topics();
  const auto vectors = weighted_columns(query, model, theta);
  RelevanceFeatures f;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const TermId w = query[i];
    const double background = collection_prob(w, stats);
    const double weight = weights.weight(w);
    f.f1 += std::log(smooth(weight * q.ml(w), lambda_q, background));
    f.f2 += std::log(smooth(translation_sum(w, q, table), lambda_q, background));
    f.f3 += std::log(smooth(topic_sum(std::span<const double>(vectors).subspan(i * k, k), q, model),
                            lambda_q, background));
    f.f4 += std::log(smooth(weight * a.ml(w), lambda_a, background));
  }
  return f;
}

std::vector<ScoredCandidate> rank_candidates(const CandidateScorer& scorer, const Corpus& corpus,
                                             std::vector<ScoredCandidate> candidates) {
  for (auto& c : candidates) c.score = scorer(corpus.pair(c.doc));
  sort_and_rank(candidates);
  return candidates;
}

Method parse_method(std::string_view name) {
  if (name == "vsm") return Method::vsm;
  if (name == "bm25") return Method::bm25;
  if (name == "lm") return Method::lm;
  if (name == "tlm") return Method::tlm;
  if (name == "t2lm") return Method::t2lm;
  if (name == "t2lm+" || name == "t2lm_plus") return Method::t2lm_plus;
  throw std::invalid_argument("unknown relevance method: " + std::string(name));
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::vsm:
      return "vsm";
    case Method::bm25:
      return "bm25";
    case Method::lm:
      return "lm";
    case Method::tlm:
      return "tlm";
    case Method::t2lm:
      return "t2lm";
    case Method::t2lm_plus:
      return "t2lm+";
  }
  return "?";
}

RelevanceModel::RelevanceModel(const Corpus& corpus, const InvertedIndex& index,
                               const TranslationTable& table, const TopicModel& model,
                               RelevanceConfig config)
    : corpus_(corpus), index_(index), table_(table), model_(model), config_(config) {
  config_.mu.validate();
}

RelevanceModel::PreparedQuery RelevanceModel::prepare(std::span<const TermId> query) const {
  PreparedQuery out;
  out.tokens.assign(query.begin(), query.end());
  if (model_.topics() == 0) return out;  // lexical scoring only
  out.theta = infer_query_topics(model_, query, config_.fold_in);
  out.weights = term_weights(model_, out.theta, query, config_.rescale_weights);
  return out;
}

double RelevanceModel::score(Method method, const PreparedQuery& query, std::size_t doc) const {
  const QAPair& qa = corpus_.pair(doc);
  switch (method) {
    case Method::vsm:
      return vsm_score(query.tokens, static_cast<std::uint32_t>(doc), index_);
    case Method::bm25:
      return bm25_score(query.tokens, static_cast<std::uint32_t>(doc), index_, config_.bm25);
    case Method::lm:
      return score_lm(query.tokens, qa.question, corpus_.stats());
    case Method::tlm:
      return score_tlm(query.tokens, qa.question, table_, corpus_.stats());
    case Method::t2lm:
      return score_t2lm(query.tokens, qa, config_.mu, table_, model_, corpus_.stats());
    case Method::t2lm_plus:
      return score_t2lm_plus(query.tokens, qa, config_.mu, table_, model_, query.theta.theta,
                             query.weights, corpus_.stats());
  }
  throw std::logic_error("unhandled method");
}

RelevanceFeatures RelevanceModel::features(const PreparedQuery& query, std::size_t doc) const {
  return features_f1_f4(query.tokens, corpus_.pair(doc), table_, model_, query.theta.theta,
                        query.weights, corpus_.stats());
}

}  // namespace cqr
