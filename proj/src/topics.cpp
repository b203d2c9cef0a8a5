#include "cqr/topics.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cqr/simd.hpp"

namespace cqr {

TopicModel::TopicModel(std::size_t topics, std::size_t vocab, double alpha, double beta,
                       std::uint64_t seed, int iterations, std::vector<std::int64_t> topic_totals,
                       std::vector<double> phi)
    : k_(topics),
      v_(vocab),
      alpha_(alpha),
      beta_(beta),
      seed_(seed),
      iterations_(iterations),
      totals_(std::move(topic_totals)),
      phi_(std::move(phi)) {
  if (k_ == 0) throw std::invalid_argument("topic model needs at least one topic");
  if (totals_.size() != k_ || phi_.size() != k_ * v_) {
    throw std::invalid_argument("topic model dimensions do not match");
  }
  build_columns();
}

void TopicModel::build_columns() {
  by_word_.assign(v_ * k_, 0.0);
  for (std::size_t z = 0; z < k_; ++z) {
    for (std::size_t w = 0; w < v_; ++w) by_word_[w * k_ + z] = phi_[z * v_ + w];
  }
  oov_column_.resize(k_);
  for (std::size_t z = 0; z < k_; ++z) {
    oov_column_[z] = beta_ / (static_cast<double>(totals_[z]) + static_cast<double>(v_) * beta_);
  }
}

double TopicModel::prob(TermId w, std::size_t z) const {
  if (z >= k_) throw std::out_of_range("topic index out of range");
  if (w >= v_) return oov_column_[z];
  return phi_[z * v_ + w];
}

std::span<const double> TopicModel::topic_row(std::size_t z) const {
  if (z >= k_) throw std::out_of_range("topic index out of range");
  return std::span<const double>(phi_).subspan(z * v_, v_);
}

std::span<const double> TopicModel::word_column(TermId w) const {
  if (w >= v_) return oov_column_;
  return std::span<const double>(by_word_).subspan(static_cast<std::size_t>(w) * k_, k_);
}

void TopicModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write topic model: " + path.string());
  out.precision(17);
  out << "cqr-lda 1\n";
  out << k_ << ' ' << v_ << ' ' << alpha_ << ' ' << beta_ << ' ' << seed_ << ' ' << iterations_ << '\n';
  for (std::size_t z = 0; z < k_; ++z) out << (z ? " " : "") << totals_[z];
  out << '\n';
  for (std::size_t z = 0; z < k_; ++z) {
    for (std::size_t w = 0; w < v_; ++w) out << (w ? " " : "") << phi_[z * v_ + w];
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TopicModel TopicModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open topic model: " + path.string());
  auto fail = [&](const std::string& what) {
    return FormatError(path.string() + ": " + what);
  };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "cqr-lda" || version != 1) throw fail("bad header");
  std::size_t k = 0;
  std::size_t v = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  if (!(in >> k >> v >> alpha >> beta >> seed >> iterations)) throw fail("bad parameter line");
  std::vector<std::int64_t> totals(k);
  for (auto& t : totals) {
    if (!(in >> t)) throw fail("bad topic totals");
  }
  std::vector<double> phi(k * v);
  for (auto& p : phi) {
    if (!(in >> p)) throw fail("truncated phi rows");
  }
  return TopicModel(k, v, alpha, beta, seed, iterations, std::move(totals), std::move(phi));
}

LdaSampler::LdaSampler(std::span<const TokenSeq> docs, std::size_t vocab_size, const LdaOptions& options)
    : docs_(docs.begin(), docs.end()),
      k_(options.topics),
      v_(vocab_size),
      alpha_(options.resolved_alpha()),
      beta_(options.beta),
      seed_(options.seed),
      rng_(options.seed) {
  if (k_ < 1) throw std::invalid_argument("topic count must be at least 1");
  if (docs_.empty()) throw std::invalid_argument("LDA needs at least one document");
  if (!(alpha_ > 0.0) || !(beta_ > 0.0)) throw std::invalid_argument("alpha and beta must be positive");
  std::size_t tokens = 0;
  for (const auto& d : docs_) {
    tokens += d.size();
    for (TermId w : d) {
      if (w >= v_) throw std::invalid_argument("document token outside vocabulary");
    }
  }
  if (k_ > tokens) throw std::invalid_argument("degenerate topic count");

  word_topic_.assign(v_ * k_, 0);
  doc_topic_.assign(docs_.size() * k_, 0);
  topic_total_.assign(k_, 0);
  weights_.resize(k_);
  assignment_.resize(docs_.size());
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    assignment_[d].resize(docs_[d].size());
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      auto z = static_cast<std::uint32_t>(uniform01(rng_) * static_cast<double>(k_));
      if (z >= k_) z = static_cast<std::uint32_t>(k_ - 1);
      assignment_[d][i] = z;
      ++word_topic_[docs_[d][i] * k_ + z];
      ++doc_topic_[d * k_ + z];
      ++topic_total_[z];
    }
  }
}

std::size_t LdaSampler::sample(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(rng_) * total;
  for (std::size_t z = 0; z < weights.size(); ++z) {
    u -= weights[z];
    if (u < 0.0) return z;
  }
  return weights.size() - 1;
}

void LdaSampler::sweep() {
  const auto& kern = simd::kernels();
  const double vbeta = static_cast<double>(v_) * beta_;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    std::int32_t* doc_counts = &doc_topic_[d * k_];
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const TermId w = docs_[d][i];
      std::int32_t* word_counts = &word_topic_[w * k_];
      const std::uint32_t old = assignment_[d][i];
      --word_counts[old];
      --doc_counts[old];
      --topic_total_[old];
      kern.gibbs_weights(doc_counts, word_counts, topic_total_.data(), alpha_, beta_, vbeta,
                         weights_.data(), k_);
      const auto z = static_cast<std::uint32_t>(sample(weights_));
      assignment_[d][i] = z;
      ++word_counts[z];
      ++doc_counts[z];
      ++topic_total_[z];
    }
  }
  ++sweeps_;
}

TopicModel LdaSampler::model() const {
  std::vector<double> phi(k_ * v_);
  std::vector<std::int64_t> totals(topic_total_.begin(), topic_total_.end());
  const double vbeta = static_cast<double>(v_) * beta_;
  for (std::size_t z = 0; z < k_; ++z) {
    const double denom = static_cast<double>(topic_total_[z]) + vbeta;
    for (std::size_t w = 0; w < v_; ++w) {
      phi[z * v_ + w] = (static_cast<double>(word_topic_[w * k_ + z]) + beta_) / denom;
    }
  }
  return TopicModel(k_, v_, alpha_, beta_, seed_, sweeps_, std::move(totals), std::move(phi));
}

TopicModel train_lda(std::span<const TokenSeq> docs, std::size_t vocab_size, const LdaOptions& options) {
  if (options.iterations < 1) throw std::invalid_argument("Gibbs iterations must be at least 1");
  LdaSampler sampler(docs, vocab_size, options);
  for (int i = 0; i < options.iterations; ++i) sampler.sweep();
  return sampler.model();
}

std::vector<TokenSeq> topic_training_docs(const Corpus& corpus) {
  std::vector<TokenSeq> docs;
  docs.reserve(corpus.pairs().size());
  for (const QAPair& p : corpus.pairs()) {
    TokenSeq d = p.question;
    d.insert(d.end(), p.answer.begin(), p.answer.end());
    docs.push_back(std::move(d));
  }
  return docs;
}

QueryTopicPosterior infer_query_topics(const TopicModel& model, std::span<const TermId> query,
                                       const FoldInOptions& options) {
  if (query.empty()) throw std::invalid_argument("empty query");
  if (options.burn_in < 0 || options.samples < 1) {
    throw std::invalid_argument("fold-in needs burn_in >= 0 and samples >= 1");
  }
  const std::size_t k = model.topics();
  QueryTopicPosterior post;
  std::vector<TermId> known;
  for (TermId w : query) {
    if (w < model.vocab_size()) known.push_back(w);
  }
  if (known.empty()) {
    post.theta.assign(k, 1.0 / static_cast<double>(k));
    post.out_of_vocabulary = true;
    return post;
  }

  std::mt19937_64 rng(options.seed);
  std::vector<std::int32_t> counts(k, 0);
  std::vector<std::uint32_t> z_of(known.size());
  for (std::size_t i = 0; i < known.size(); ++i) {
    auto z = static_cast<std::uint32_t>(uniform01(rng) * static_cast<double>(k));
    if (z >= k) z = static_cast<std::uint32_t>(k - 1);
    z_of[i] = z;
    ++counts[z];
  }
  const auto& kern = simd::kernels();
  std::vector<double> weights(k);
  std::vector<double> acc(k, 0.0);
  const double alpha = model.alpha();
  const double denom = static_cast<double>(known.size()) + static_cast<double>(k) * alpha;
  const int total_iters = options.burn_in + options.samples;
  for (int iter = 0; iter < total_iters; ++iter) {
    for (std::size_t i = 0; i < known.size(); ++i) {
      --counts[z_of[i]];
      kern.fold_in_weights(counts.data(), model.word_column(known[i]).data(), alpha, weights.data(), k);
      double total = 0.0;
      for (double w : weights) total += w;
      double u = uniform01(rng) * total;
      std::size_t z = k - 1;
      for (std::size_t j = 0; j < k; ++j) {
        u -= weights[j];
        if (u < 0.0) {
          z = j;
          break;
        }
      }
      z_of[i] = static_cast<std::uint32_t>(z);
      ++counts[z];
    }
    if (iter >= options.burn_in) {
      for (std::size_t z = 0; z < k; ++z) acc[z] += (static_cast<double>(counts[z]) + alpha) / denom;
    }
  }
  post.theta.resize(k);
  for (std::size_t z = 0; z < k; ++z) post.theta[z] = acc[z] / static_cast<double>(options.samples);
  return post;
}

double topic_word_prob(const TopicModel& model, TermId w, std::size_t z) { return model.prob(w, z); }

}  // namespace cqr
