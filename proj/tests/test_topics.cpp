#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cqr/topics.hpp"
#include "support.hpp"

using namespace cqr;

namespace {

// Two groups of documents over disjoint vocabularies: ids [0, 10) and [10, 20).
std::vector<TokenSeq> two_groups(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TokenSeq> docs;
  for (int d = 0; d < 60; ++d) {
    const TermId base = d % 2 == 0 ? 0 : 10;
    TokenSeq doc;
    for (int i = 0; i < 15; ++i) doc.push_back(base + static_cast<TermId>(rng() % 10));
    docs.push_back(doc);
  }
  return docs;
}

double row_sum(const TopicModel& m, std::size_t z) {
  double s = 0;
  for (double p : m.topic_row(z)) s += p;
  return s;
}

}  // namespace

TEST_CASE("single topic reduces to smoothed unigram counts") {
  const std::vector<TokenSeq> docs{{0, 1, 1}, {2, 1}, {0}};
  LdaOptions opt;
  opt.topics = 1;
  opt.iterations = 3;
  const TopicModel m = train_lda(docs, 4, opt);
  const double n = 6, v = 4, beta = 0.01;
  const std::vector<double> counts{2, 3, 1, 0};
  for (TermId w = 0; w < 4; ++w) {
    CHECK(m.prob(w, 0) == doctest::Approx((counts[w] + beta) / (n + v * beta)).epsilon(1e-14));
  }
  CHECK(std::abs(row_sum(m, 0) - 1.0) < 1e-9);
  const auto theta = infer_query_topics(m, TokenSeq{0, 1});
  REQUIRE(theta.theta.size() == 1);
  CHECK(theta.theta[0] == 1.0);
}

TEST_CASE("disjoint vocabularies separate into two topics") {
  const auto docs = two_groups(3);
  LdaOptions opt;
  opt.topics = 2;
  opt.iterations = 200;
  opt.seed = 17;
  const TopicModel m = train_lda(docs, 20, opt);
  for (std::size_t z = 0; z < 2; ++z) {
    CHECK(std::abs(row_sum(m, z) - 1.0) < 1e-9);
    double low = 0;
    for (TermId w = 0; w < 10; ++w) low += m.prob(w, z);
    CHECK(std::max(low, 1.0 - low) > 0.9);
  }
  // the topic that owns group A
  std::size_t a = 0;
  double best = 0;
  for (std::size_t z = 0; z < 2; ++z) {
    double low = 0;
    for (TermId w = 0; w < 10; ++w) low += m.prob(w, z);
    if (low > best) best = low, a = z;
  }
  FoldInOptions fold;
  fold.burn_in = 200;
  fold.samples = 200;
  // Default alpha is 50 / K = 25: with all four tokens on topic a the
  // posterior is (4 + 25) / (4 + 2 * 25).
  const auto post = infer_query_topics(m, TokenSeq{1, 3, 5, 7}, fold);
  CHECK(post.theta[a] == doctest::Approx(29.0 / 54.0).epsilon(1e-3));
  CHECK_FALSE(post.out_of_vocabulary);
  CHECK(std::abs(post.theta[0] + post.theta[1] - 1.0) < 1e-9);

  opt.alpha = 0.1;
  const TopicModel sharp = train_lda(docs, 20, opt);
  std::size_t sa = 0;
  for (std::size_t z = 0; z < 2; ++z) {
    double low = 0;
    for (TermId w = 0; w < 10; ++w) low += sharp.prob(w, z);
    if (low > 0.5) sa = z;
  }
  CHECK(infer_query_topics(sharp, TokenSeq{1, 3, 5, 7}, fold).theta[sa] > 0.8);
}

TEST_CASE("sampler counts stay consistent after every sweep") {
  const auto docs = two_groups(5);
  LdaOptions opt;
  opt.topics = 4;
  LdaSampler sampler(docs, 20, opt);
  std::vector<std::int64_t> freq(20, 0);
  for (const auto& d : docs)
    for (TermId w : d) ++freq[w];
  for (int s = 0; s < 5; ++s) {
    sampler.sweep();
    for (TermId w = 0; w < 20; ++w) {
      std::int64_t sum = 0;
      for (std::size_t z = 0; z < 4; ++z) sum += sampler.word_topic_count(w, z);
      CHECK(sum == freq[w]);
    }
    for (std::size_t z = 0; z < 4; ++z) {
      std::int64_t sum = 0;
      for (TermId w = 0; w < 20; ++w) sum += sampler.word_topic_count(w, z);
      CHECK(sum == sampler.topic_count(z));
    }
    for (std::size_t d = 0; d < docs.size(); ++d) {
      std::int64_t sum = 0;
      for (std::size_t z = 0; z < 4; ++z) sum += sampler.doc_topic_count(d, z);
      CHECK(sum == static_cast<std::int64_t>(docs[d].size()));
    }
  }
  CHECK(sampler.sweeps_done() == 5);
}

TEST_CASE("training is deterministic per seed") {
  const auto docs = two_groups(8);
  LdaOptions opt;
  opt.topics = 5;
  opt.iterations = 20;
  opt.seed = 4;
  const TopicModel a = train_lda(docs, 20, opt);
  const TopicModel b = train_lda(docs, 20, opt);
  CHECK(a == b);
  opt.seed = 5;
  CHECK_FALSE(train_lda(docs, 20, opt) == a);
  for (std::size_t z = 0; z < 5; ++z) {
    CHECK(std::abs(row_sum(a, z) - 1.0) < 1e-9);
    for (double p : a.topic_row(z)) CHECK(p > 0.0);
  }
}

TEST_CASE("topic word lookups") {
  const auto docs = two_groups(2);
  LdaOptions opt;
  opt.topics = 3;
  opt.iterations = 10;
  const TopicModel m = train_lda(docs, 20, opt);
  for (std::size_t z = 0; z < 3; ++z) {
    const double floor = opt.beta / (static_cast<double>(m.topic_total(z)) + 20 * opt.beta);
    CHECK(topic_word_prob(m, 500, z) == doctest::Approx(floor).epsilon(1e-15));
    CHECK(topic_word_prob(m, 4, z) == m.topic_row(z)[4]);
    CHECK(m.word_column(4)[z] == m.topic_row(z)[4]);
    CHECK(m.word_column(500)[z] == topic_word_prob(m, 500, z));
  }
  CHECK_THROWS_AS(topic_word_prob(m, 1, 3), std::out_of_range);
  CHECK(m.alpha() == doctest::Approx(50.0 / 3.0));
}

TEST_CASE("fold-in fallbacks and normalization") {
  const auto docs = two_groups(6);
  LdaOptions opt;
  opt.topics = 4;
  opt.iterations = 15;
  const TopicModel m = train_lda(docs, 20, opt);
  const auto oov = infer_query_topics(m, TokenSeq{100, 101});
  CHECK(oov.out_of_vocabulary);
  CHECK(oov.theta == std::vector<double>{0.25, 0.25, 0.25, 0.25});

  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    TokenSeq q;
    for (int j = 0; j < 1 + i % 6; ++j) q.push_back(static_cast<TermId>(rng() % 25));
    FoldInOptions f;
    f.seed = static_cast<std::uint64_t>(i);
    const auto post = infer_query_topics(m, q, f);
    CHECK(std::abs(std::accumulate(post.theta.begin(), post.theta.end(), 0.0) - 1.0) < 1e-9);
    for (double t : post.theta) CHECK(t >= 0.0);
    CHECK(infer_query_topics(m, q, f).theta == post.theta);
  }
}

TEST_CASE("degenerate configurations") {
  const std::vector<TokenSeq> docs{{0, 1}, {1}};
  LdaOptions opt;
  opt.topics = 4;
  CHECK_THROWS_WITH(train_lda(docs, 2, opt), doctest::Contains("degenerate topic count"));
  opt.topics = 0;
  CHECK_THROWS(train_lda(docs, 2, opt));
  opt.topics = 2;
  opt.iterations = 0;
  CHECK_THROWS(train_lda(docs, 2, opt));
  opt.iterations = 1;
  CHECK_THROWS(train_lda(std::vector<TokenSeq>{}, 2, opt));
}

TEST_CASE("model file round-trips") {
  LdaOptions opt;
  opt.topics = 3;
  opt.iterations = 5;
  const TopicModel m = train_lda(two_groups(1), 20, opt);
  testing::TempDir dir;
  m.save(dir / "lda.txt");
  CHECK(TopicModel::load(dir / "lda.txt") == m);
  testing::write_file(dir / "bad.txt", "cqr-lda 1\n2 2 1 0.01 1 1\n");
  CHECK_THROWS(TopicModel::load(dir / "bad.txt"));
}
