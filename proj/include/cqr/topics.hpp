#pragma once

// LDA topic model trained by collapsed Gibbs sampling, and fold-in inference
// of a query's topic mixture with the topic-word distributions frozen.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cqr/corpus.hpp"

namespace cqr {

struct LdaOptions {
  std::size_t topics = 50;
  std::optional<double> alpha;  // default 50 / topics
  double beta = 0.01;
  int iterations = 500;
  std::uint64_t seed = 1;

  double resolved_alpha() const { return alpha.value_or(50.0 / static_cast<double>(topics)); }
};

class TopicModel {
 public:
  TopicModel() = default;
  // topic_totals[z] = n_z; phi is topics x vocab row-major.
  TopicModel(std::size_t topics, std::size_t vocab, double alpha, double beta, std::uint64_t seed,
             int iterations, std::vector<std::int64_t> topic_totals, std::vector<double> phi);

  std::size_t topics() const { return k_; }
  std::size_t vocab_size() const { return v_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  std::uint64_t seed() const { return seed_; }
  int iterations() const { return iterations_; }
  std::int64_t topic_total(std::size_t z) const { return totals_.at(z); }

  // P(w|z); words outside the training vocabulary get beta / (n_z + V beta).
  double prob(TermId w, std::size_t z) const;
  std::span<const double> topic_row(std::size_t z) const;
  // Length-K vector P(w|z_0..z_{K-1}); contiguous for the dense kernels.
  std::span<const double> word_column(TermId w) const;

  void save(const std::filesystem::path& path) const;
  static TopicModel load(const std::filesystem::path& path);

  bool operator==(const TopicModel&) const = default;

 private:
  void build_columns();

  std::size_t k_ = 0;
  std::size_t v_ = 0;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::uint64_t seed_ = 0;
  int iterations_ = 0;
  std::vector<std::int64_t> totals_;
  std::vector<double> phi_;          // K x V
  std::vector<double> by_word_;      // V x K
  std::vector<double> oov_column_;   // K
};

// Collapsed Gibbs sampler state. train_lda drives it; exposed so the count
// invariants can be checked between sweeps.
class LdaSampler {
 public:
  LdaSampler(std::span<const TokenSeq> docs, std::size_t vocab_size, const LdaOptions& options);

  void sweep();
  int sweeps_done() const { return sweeps_; }
  TopicModel model() const;

  std::size_t topics() const { return k_; }
  std::int32_t word_topic_count(TermId w, std::size_t z) const { return word_topic_[w * k_ + z]; }
  std::int32_t topic_count(std::size_t z) const { return topic_total_[z]; }
  std::int32_t doc_topic_count(std::size_t d, std::size_t z) const { return doc_topic_[d * k_ + z]; }
  std::size_t doc_count() const { return docs_.size(); }

 private:
  std::size_t sample(std::span<const double> weights);

  std::vector<TokenSeq> docs_;
  std::vector<std::vector<std::uint32_t>> assignment_;
  std::size_t k_;
  std::size_t v_;
  double alpha_;
  double beta_;
  std::uint64_t seed_;
  std::vector<std::int32_t> word_topic_;   // V x K
  std::vector<std::int32_t> doc_topic_;    // D x K
  std::vector<std::int32_t> topic_total_;  // K
  std::vector<double> weights_;
  std::mt19937_64 rng_;
  int sweeps_ = 0;
};

// Documents must hold ids < vocab_size. Throws when topics exceeds the total
// token count ("degenerate topic count").
TopicModel train_lda(std::span<const TokenSeq> docs, std::size_t vocab_size, const LdaOptions& options);

// One training document per pair: question tokens followed by answer tokens.
std::vector<TokenSeq> topic_training_docs(const Corpus& corpus);

struct QueryTopicPosterior {
  std::vector<double> theta;
  bool out_of_vocabulary = false;  // every query token unseen: theta is uniform
};

struct FoldInOptions {
  int burn_in = 50;
  int samples = 20;
  std::uint64_t seed = 1;
};

QueryTopicPosterior infer_query_topics(const TopicModel& model, std::span<const TermId> query,
                                       const FoldInOptions& options = {});

// Throws std::out_of_range for z >= K.
double topic_word_prob(const TopicModel& model, TermId w, std::size_t z);

// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace cqr
