#include "cqr/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace cqr {

IndexField parse_index_field(std::string_view name) {
  if (name == "question") return IndexField::question;
  if (name == "question_and_answer" || name == "qa") return IndexField::question_and_answer;
  throw std::invalid_argument("unknown index field: " + std::string(name));
}

std::string_view index_field_name(IndexField field) {
  return field == IndexField::question ? "question" : "question_and_answer";
}

InvertedIndex InvertedIndex::build(const Corpus& corpus, IndexField field) {
  if (corpus.pairs().empty()) throw std::invalid_argument("cannot index an empty corpus");
  InvertedIndex idx;
  idx.field_ = field;
  idx.postings_.resize(corpus.vocabulary().size());
  const std::size_t n = corpus.pairs().size();
  idx.doc_len_.resize(n);
  idx.ids_.resize(n);

  std::vector<std::uint32_t> tf(corpus.vocabulary().size(), 0);
  std::vector<TermId> touched;
  std::uint64_t total_len = 0;
  for (std::uint32_t d = 0; d < n; ++d) {
    const QAPair& p = corpus.pair(d);
    idx.ids_[d] = p.id;
    touched.clear();
    auto count = [&](const TokenSeq& seq) {
      for (TermId t : seq) {
        if (tf[t]++ == 0) touched.push_back(t);
      }
    };
    count(p.question);
    std::size_t len = p.question.size();
    if (field == IndexField::question_and_answer) {
      count(p.answer);
      len += p.answer.size();
    }
    std::sort(touched.begin(), touched.end());
    for (TermId t : touched) {
      idx.postings_[t].push_back({d, tf[t]});
      tf[t] = 0;
    }
    idx.doc_len_[d] = static_cast<std::uint32_t>(len);
    total_len += len;
  }
  idx.avgdl_ = static_cast<double>(total_len) / static_cast<double>(n);

  idx.tfidf_norm_.assign(n, 0.0);
  for (TermId t = 0; t < idx.postings_.size(); ++t) {
    const double idf = idx.idf_vsm(t);
    for (const Posting& p : idx.postings_[t]) {
      const double w = static_cast<double>(p.tf) * idf;
      idx.tfidf_norm_[p.doc] += w * w;
    }
  }
  for (double& v : idx.tfidf_norm_) v = std::sqrt(v);
  return idx;
}

std::span<const Posting> InvertedIndex::postings(TermId t) const {
  if (t >= postings_.size()) return {};
  return postings_[t];
}

std::uint32_t InvertedIndex::term_frequency(TermId t, std::uint32_t doc) const {
  auto list = postings(t);
  auto it = std::lower_bound(list.begin(), list.end(), doc,
                             [](const Posting& p, std::uint32_t d) { return p.doc < d; });
  return (it != list.end() && it->doc == doc) ? it->tf : 0;
}

double InvertedIndex::idf_vsm(TermId t) const {
  const double df = doc_frequency(t);
  if (df == 0) return 0.0;
  return std::log(static_cast<double>(doc_count()) / df);
}

double InvertedIndex::idf_bm25(TermId t) const {
  const double df = doc_frequency(t);
  const double n = static_cast<double>(doc_count());
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

void InvertedIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write index: " + path.string());
  out.precision(17);
  out << "cqr-index 1\n";
  out << "field " << index_field_name(field_) << "\n";
  out << "docs " << doc_count() << " avgdl " << avgdl_ << "\n";
  for (std::size_t d = 0; d < doc_count(); ++d) out << ids_[d] << ' ' << doc_len_[d] << "\n";
  out << "terms " << postings_.size() << "\n";
  for (TermId t = 0; t < postings_.size(); ++t) {
    out << t << ' ' << postings_[t].size();
    for (const Posting& p : postings_[t]) out << ' ' << p.doc << ':' << p.tf;
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

InvertedIndex build_index(const Corpus& corpus, IndexField field) {
  return InvertedIndex::build(corpus, field);
}

namespace {

double bm25_term(double tf, double idf, double dl, double avgdl, const Bm25Params& params) {
  const double norm = params.k1 * (1.0 - params.b + params.b * dl / avgdl);
  return idf * (tf * (params.k1 + 1.0)) / (tf + norm);
}

void check_params(const Bm25Params& params) {
  if (!(params.k1 > 0.0)) throw std::invalid_argument("BM25 k1 must be positive");
  if (!(params.b >= 0.0 && params.b <= 1.0)) throw std::invalid_argument("BM25 b must lie in [0,1]");
}

}  // namespace

double bm25_score(std::span<const TermId> query, std::uint32_t doc, const InvertedIndex& index,
                  const Bm25Params& params) {
  check_params(params);
  const double dl = index.doc_length(doc);
  double score = 0.0;
  for (TermId t : query) {
    const std::uint32_t tf = index.term_frequency(t, doc);
    if (tf == 0) continue;
    score += bm25_term(tf, index.idf_bm25(t), dl, index.avg_doc_length(), params);
  }
  return score;
}

double vsm_score(std::span<const TermId> query, std::uint32_t doc, const InvertedIndex& index) {
  std::map<TermId, std::uint32_t> qtf;
  for (TermId t : query) ++qtf[t];
  double dot = 0.0;
  double qnorm = 0.0;
  for (const auto& [t, count] : qtf) {
    const double idf = index.idf_vsm(t);
    const double qw = static_cast<double>(count) * idf;
    qnorm += qw * qw;
    const std::uint32_t tf = index.term_frequency(t, doc);
    if (tf != 0) dot += qw * static_cast<double>(tf) * idf;
  }
  const double dnorm = index.tfidf_norm(doc);
  if (qnorm == 0.0 || dnorm == 0.0 || dot == 0.0) return 0.0;
  return std::min(1.0, dot / (std::sqrt(qnorm) * dnorm));
}

void sort_and_rank(std::vector<ScoredCandidate>& list) {
  std::sort(list.begin(), list.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.qa_id < b.qa_id;
  });
  for (std::size_t i = 0; i < list.size(); ++i) list[i].rank = i + 1;
}

std::vector<ScoredCandidate> retrieve_candidates(std::span<const TermId> query,
                                                 const InvertedIndex& index, std::size_t k,
                                                 const Bm25Params& params) {
  if (k == 0) throw std::invalid_argument("top-k must be at least 1");
  check_params(params);
  std::vector<double> acc(index.doc_count(), 0.0);
  std::vector<char> hit(index.doc_count(), 0);
  std::vector<std::uint32_t> docs;
  for (TermId t : query) {
    const double idf = index.idf_bm25(t);
    for (const Posting& p : index.postings(t)) {
      if (!hit[p.doc]) {
        hit[p.doc] = 1;
        docs.push_back(p.doc);
      }
      acc[p.doc] += bm25_term(p.tf, idf, index.doc_length(p.doc), index.avg_doc_length(), params);
    }
  }
  std::vector<ScoredCandidate> out;
  out.reserve(docs.size());
  for (std::uint32_t d : docs) out.push_back({index.doc_id(d), acc[d], 0, d});
  auto better = [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.qa_id < b.qa_id;
  };
  if (out.size() > k) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), better);
    out.resize(k);
  } else {
    std::sort(out.begin(), out.end(), better);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

}  // namespace cqr
