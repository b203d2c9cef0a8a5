#include <doctest.h>

#include <set>

#include "cqr/corpus.hpp"
#include "cqr/synth.hpp"
#include "support.hpp"

using namespace cqr;

namespace {

bool is_function_word(const std::string& w) { return w.rfind("fw", 0) == 0; }

}  // namespace

TEST_CASE("topic vocabularies partition the content words") {
  SynthOptions opt;
  opt.size = 100;
  opt.topics = 2;
  opt.seed = 5;
  const auto data = generate_synthetic(opt);
  CHECK(data.pairs.size() == 100);
  CHECK(data.topics == 2);

  const auto v0 = topic_vocabulary(0, opt);
  const auto v1 = topic_vocabulary(1, opt);
  const std::set<std::string> s0(v0.begin(), v0.end()), s1(v1.begin(), v1.end());
  for (const auto& w : s0) CHECK_FALSE(s1.contains(w));

  for (const auto& p : data.pairs) {
    // Every pair stays within a single topic.
    int topic = -1;
    for (const auto* side : {&p.question, &p.answer}) {
      for (const auto& w : *side) {
        if (is_function_word(w)) continue;
        const int t = s0.contains(w) ? 0 : s1.contains(w) ? 1 : -2;
        REQUIRE(t >= 0);
        if (topic < 0) topic = t;
        CHECK(t == topic);
      }
    }
    CHECK(topic >= 0);
  }
}

TEST_CASE("planted judgments") {
  SynthOptions opt;
  opt.size = 200;
  opt.topics = 3;
  opt.seed = 11;
  const auto data = generate_synthetic(opt);
  REQUIRE(data.queries.size() == 20);
  std::map<std::string, std::uint64_t> best;
  for (const auto& u : data.users) best[u.id] = u.best_answers;
  std::map<std::string, const SynthPair*> by_id;
  for (const auto& p : data.pairs) by_id[p.id] = &p;

  for (const auto& q : data.queries) {
    REQUIRE(data.qrels.has_query(q.id));
    const auto& judged = data.qrels.judged(q.id);
    CHECK(judged.size() == 2 + opt.related_per_query);
    int twos = 0;
    for (const auto& [doc, grade] : judged) {
      REQUIRE(by_id.contains(doc));
      if (grade == 2) {
        ++twos;
        // The duplicate answered by an expert.
        CHECK(best.at(by_id.at(doc)->answerer) >= 100);
      }
    }
    CHECK(twos == 1);
  }
}

TEST_CASE("same seed gives identical files") {
  SynthOptions opt;
  opt.size = 150;
  opt.topics = 3;
  opt.seed = 42;
  testing::TempDir a, b, c;
  const auto fa = write_synthetic(generate_synthetic(opt), a.path());
  const auto fb = write_synthetic(generate_synthetic(opt), b.path());
  for (const auto& [x, y] : {std::pair{fa.corpus, fb.corpus}, {fa.users, fb.users}, {fa.queries, fb.queries},
                             {fa.qrels, fb.qrels}}) {
    CHECK(testing::read_file(x) == testing::read_file(y));
    CHECK_FALSE(testing::read_file(x).empty());
  }
  opt.seed = 43;
  const auto fc = write_synthetic(generate_synthetic(opt), c.path());
  CHECK(testing::read_file(fa.corpus) != testing::read_file(fc.corpus));

  // The files load through the regular readers.
  const Corpus corpus = ingest_corpus(fa.corpus, fa.users);
  CHECK(corpus.pairs().size() == 150);
  CHECK(read_queries(fa.queries, corpus).size() == 15);
  CHECK(read_qrels(fa.qrels).all().size() == 15);
}

TEST_CASE("bad synthetic options") {
  SynthOptions opt;
  opt.size = 9;
  CHECK_THROWS_AS(generate_synthetic(opt), std::invalid_argument);
  opt.size = 100;
  opt.topics = 1;
  CHECK_THROWS_AS(generate_synthetic(opt), std::invalid_argument);
}
