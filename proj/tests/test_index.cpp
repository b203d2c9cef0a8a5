#include <doctest.h>

#include "cqr/index.hpp"
#include "support.hpp"

using namespace cqr;
using oracle::Words;
using testing::Fixture;

namespace {

std::vector<Words> indexed_texts(const Fixture& f, IndexField field) {
  std::vector<Words> docs;
  for (const auto& p : f.qa) {
    Words d = p.q;
    if (field == IndexField::question_and_answer) d.insert(d.end(), p.a.begin(), p.a.end());
    docs.push_back(d);
  }
  return docs;
}

const std::vector<oracle::QA> kToy{
    {{"how", "to", "cook", "rice"}, {"boil", "rice", "in", "water"}},
    {{"rice", "cooker", "broken"}, {"buy", "a", "new", "cooker"}},
    {{"learn", "to", "swim"}, {"go", "to", "the", "pool"}},
    {{"cook", "pasta"}, {"boil", "water", "add", "pasta", "salt"}},
    {{"rice", "rice", "rice"}, {}},
};

}  // namespace

TEST_CASE("postings and lengths") {
  const Fixture f({{{"a", "b"}, {"x"}}, {{"b"}, {}}});
  const InvertedIndex idx = build_index(*f.corpus, IndexField::question);
  const auto pa = idx.postings(f.id("a"));
  REQUIRE(pa.size() == 1);
  CHECK(pa[0] == Posting{0, 1});
  const auto pb = idx.postings(f.id("b"));
  REQUIRE(pb.size() == 2);
  CHECK(pb[0] == Posting{0, 1});
  CHECK(pb[1] == Posting{1, 1});
  CHECK(idx.avg_doc_length() == 1.5);
  CHECK(idx.postings(f.id("x")).empty());
  CHECK(idx.doc_length(0) == 2);

  const InvertedIndex both = build_index(*f.corpus, IndexField::question_and_answer);
  CHECK(both.doc_length(0) == 3);
  CHECK(both.postings(f.id("x")).size() == 1);
}

TEST_CASE("doc length equals the sum of its term frequencies") {
  const Fixture f(kToy);
  const InvertedIndex idx = build_index(*f.corpus, IndexField::question_and_answer);
  std::vector<std::uint32_t> sums(idx.doc_count(), 0);
  for (TermId t = 0; t < f.vocab_size(); ++t) {
    std::uint32_t prev = 0;
    bool first = true;
    for (const auto& p : idx.postings(t)) {
      CHECK((first || p.doc > prev));
      first = false;
      prev = p.doc;
      sums[p.doc] += p.tf;
    }
  }
  for (std::uint32_t d = 0; d < idx.doc_count(); ++d) CHECK(sums[d] == idx.doc_length(d));
}

TEST_CASE("bm25 matches the oracle") {
  const Fixture f(kToy);
  for (IndexField field : {IndexField::question, IndexField::question_and_answer}) {
    const InvertedIndex idx = build_index(*f.corpus, field);
    const auto docs = indexed_texts(f, field);
    for (const Words& q : {Words{"rice"}, Words{"cook", "rice"}, Words{"boil", "water", "water"},
                           Words{"to", "nothing"}}) {
      for (std::uint32_t d = 0; d < docs.size(); ++d) {
        for (Bm25Params p : {Bm25Params{}, Bm25Params{2.0, 0.3}}) {
          CHECK(testing::close_rel(bm25_score(f.ids(q), d, idx, p), oracle::bm25(q, d, docs, p.k1, p.b), 1e-12));
        }
      }
    }
  }
}

TEST_CASE("bm25 basics") {
  const Fixture f({{{"a", "b"}, {}}, {{"b"}, {}}});
  const InvertedIndex idx = build_index(*f.corpus, IndexField::question);
  CHECK(bm25_score(f.ids({"zz"}), 0, idx) == 0.0);
  // one term in a two-document toy case, evaluated by hand:
  // idf = ln((2 - 1 + .5) / (1 + .5) + 1) = ln 2, avgdl = 1.5, dl = 2
  const double expected = std::log(2.0) * 2.2 / (1.0 + 1.2 * (0.25 + 0.75 * 2.0 / 1.5));
  CHECK(bm25_score(f.ids({"a"}), 0, idx) == doctest::Approx(expected).epsilon(1e-14));

  const Fixture g({{{"w", "x", "y", "z"}, {}}, {{"w", "w", "y", "z"}, {}}, {{"q"}, {}}});
  const InvertedIndex gi = build_index(*g.corpus, IndexField::question);
  const double one = bm25_score(g.ids({"w"}), 0, gi);
  const double two = bm25_score(g.ids({"w"}), 1, gi);
  CHECK(two > one);
  CHECK(two < 2 * one);
  CHECK_THROWS(bm25_score(g.ids({"w"}), 0, gi, Bm25Params{-1.0, 0.5}));
}

TEST_CASE("vsm matches the oracle and its bounds") {
  const Fixture f(kToy);
  const InvertedIndex idx = build_index(*f.corpus, IndexField::question_and_answer);
  const auto docs = indexed_texts(f, IndexField::question_and_answer);
  for (const Words& q : {Words{"rice"}, Words{"cook", "rice", "rice"}, Words{"swim", "pool"}}) {
    for (std::uint32_t d = 0; d < docs.size(); ++d) {
      const double s = vsm_score(f.ids(q), d, idx);
      CHECK(testing::close_rel(s, oracle::vsm(q, d, docs), 1e-12));
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
  }
  const Fixture g({{{"a", "b"}, {}}, {{"c"}, {}}, {{"d"}, {}}});
  const InvertedIndex gi = build_index(*g.corpus, IndexField::question);
  CHECK(vsm_score(g.ids({"a", "b"}), 0, gi) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(vsm_score(g.ids({"c"}), 0, gi) == 0.0);
}

TEST_CASE("candidate retrieval") {
  std::vector<oracle::QA> ten;
  for (int i = 0; i < 10; ++i) ten.push_back({{"common", "w" + std::to_string(i)}, {}});
  const Fixture f(ten);
  const InvertedIndex idx = build_index(*f.corpus, IndexField::question);
  const auto all = retrieve_candidates(f.ids({"common"}), idx, 500);
  CHECK(all.size() == 10);
  // identical scores: ascending qa_id
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].rank == i + 1);
    if (i > 0) CHECK(all[i - 1].qa_id < all[i].qa_id);
  }
  CHECK(retrieve_candidates(f.ids({"nowhere"}), idx, 5).empty());
  CHECK_THROWS(retrieve_candidates(f.ids({"common"}), idx, 0));

  const Fixture g(kToy);
  const InvertedIndex gi = build_index(*g.corpus, IndexField::question_and_answer);
  const auto q = g.ids({"rice", "boil", "water"});
  const auto top = retrieve_candidates(q, gi, 3);
  REQUIRE(top.size() == 3);
  for (std::size_t i = 0; i < top.size(); ++i) {
    CHECK(top[i].rank == i + 1);
    CHECK(top[i].score == bm25_score(q, static_cast<std::uint32_t>(top[i].doc), gi));
    if (i > 0) CHECK(top[i - 1].score >= top[i].score);
  }
}

TEST_CASE("scores ignore document insertion order and unrelated additions") {
  const Fixture f(kToy);
  std::vector<oracle::QA> permuted(kToy.rbegin(), kToy.rend());
  const Fixture g(permuted);
  const InvertedIndex fi = build_index(*f.corpus, IndexField::question_and_answer);
  const InvertedIndex gi = build_index(*g.corpus, IndexField::question_and_answer);
  const Words q{"rice", "cook", "water"};
  for (std::uint32_t d = 0; d < kToy.size(); ++d) {
    const auto e = static_cast<std::uint32_t>(kToy.size() - 1 - d);
    CHECK(bm25_score(f.ids(q), d, fi) == doctest::Approx(bm25_score(g.ids(q), e, gi)).epsilon(1e-14));
    CHECK(vsm_score(f.ids(q), d, fi) == doctest::Approx(vsm_score(g.ids(q), e, gi)).epsilon(1e-14));
  }

  auto more = kToy;
  more.push_back({{"unrelated", "words"}, {"only"}});
  const Fixture h(more);
  const InvertedIndex hi = build_index(*h.corpus, IndexField::question_and_answer);
  for (std::uint32_t d = 0; d < kToy.size(); ++d) {
    for (const auto& w : {"rice", "cook", "water", "to"}) {
      CHECK(fi.term_frequency(f.id(w), d) == hi.term_frequency(h.id(w), d));
    }
  }
}

TEST_CASE("index field names") {
  CHECK(parse_index_field("question") == IndexField::question);
  CHECK(parse_index_field("question_and_answer") == IndexField::question_and_answer);
  CHECK_THROWS(parse_index_field("answers"));
}
