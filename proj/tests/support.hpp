#pragma once

// Small fixtures shared by the unit tests.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "cqr/corpus.hpp"
#include "cqr/ltr.hpp"
#include "cqr/topics.hpp"
#include "cqr/translation.hpp"
#include "oracle/brute_force.hpp"

namespace testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cqr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// A library corpus and the matching string-level oracle view. Pair i gets id
// "p<i>", asker "ask<i>" and answerer "ans<i>".
struct Fixture {
  std::vector<oracle::QA> qa;
  std::unique_ptr<cqr::Corpus> corpus;

  explicit Fixture(std::vector<oracle::QA> pairs, std::map<std::string, std::uint64_t> best = {})
      : qa(std::move(pairs)) {
    cqr::Vocabulary vocab;
    std::vector<cqr::QAPair> out;
    for (std::size_t i = 0; i < qa.size(); ++i) {
      cqr::QAPair p;
      p.id = "p" + std::to_string(i);
      for (const auto& w : qa[i].q) p.question.push_back(vocab.intern(w));
      for (const auto& w : qa[i].a) p.answer.push_back(vocab.intern(w));
      p.asker = "ask" + std::to_string(i);
      p.answerer = "ans" + std::to_string(i);
      out.push_back(std::move(p));
    }
    std::map<std::string, cqr::UserRecord> users;
    for (const auto& [u, a] : best) users[u] = {u, a};
    corpus = std::make_unique<cqr::Corpus>(std::move(out), std::move(vocab), std::move(users));
  }

  cqr::TokenSeq ids(const oracle::Words& words) const { return corpus->encode_query(words); }
  cqr::TermId id(const std::string& w) const { return *corpus->vocabulary().find(w); }
  std::size_t vocab_size() const { return corpus->vocabulary().size(); }

  cqr::TranslationTable table(const oracle::Table& t) const {
    std::map<cqr::TermId, std::map<cqr::TermId, double>> rows;
    for (const auto& [src, row] : t)
      for (const auto& [w, p] : row) rows[id(src)][id(w)] = p;
    return cqr::TranslationTable(rows);
  }

  // Topic model from per-word counts over the fixture vocabulary.
  cqr::TopicModel topic_model(const oracle::Topics& m) const {
    const std::size_t v = vocab_size();
    std::vector<std::int64_t> totals(m.k, 0);
    for (const auto& [w, c] : m.counts)
      for (std::size_t z = 0; z < m.k; ++z) totals[z] += static_cast<std::int64_t>(c[z]);
    std::vector<double> phi(m.k * v);
    for (std::size_t z = 0; z < m.k; ++z) {
      for (cqr::TermId w = 0; w < v; ++w) {
        auto it = m.counts.find(corpus->vocabulary().token(w));
        const double n = it == m.counts.end() ? 0.0 : it->second[z];
        phi[z * v + w] = (n + m.beta) / (static_cast<double>(totals[z]) + static_cast<double>(v) * m.beta);
      }
    }
    return cqr::TopicModel(m.k, v, 1.0, m.beta, 1, 1, totals, phi);
  }

  // Oracle topic description: vocabulary copied from the corpus.
  oracle::Topics oracle_topics(std::size_t k, double beta,
                               std::map<std::string, std::vector<double>> counts) const {
    oracle::Topics m;
    m.k = k;
    m.beta = beta;
    m.counts = std::move(counts);
    for (cqr::TermId w = 0; w < vocab_size(); ++w) m.vocab.push_back(corpus->vocabulary().token(w));
    return m;
  }
};

// Queries of `per_query` documents with two uniform features; the label is
// 1 exactly when the first feature exceeds 0.5.
inline cqr::RankingDataset separable_dataset(std::size_t queries, std::size_t per_query, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cqr::RankingDataset data;
  for (std::size_t q = 0; q < queries; ++q) {
    for (std::size_t d = 0; d < per_query; ++d) {
      cqr::RankingInstance inst;
      inst.query_id = "q" + std::to_string(q);
      inst.doc_id = "d" + std::to_string(q) + "_" + std::to_string(d);
      inst.features = {u(rng), u(rng)};
      inst.label = inst.features[0] > 0.5 ? 1 : 0;
      data.push_back(inst);
    }
  }
  return data;
}

inline bool close_rel(double a, double b, double tol) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= tol * scale;
}

}  // namespace testing
