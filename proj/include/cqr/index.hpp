#pragma once

// Inverted index with BM25 and tf-idf cosine baselines, plus top-k candidate
// generation.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cqr/corpus.hpp"

namespace cqr {

enum class IndexField { question, question_and_answer };

IndexField parse_index_field(std::string_view name);
std::string_view index_field_name(IndexField field);

struct Posting {
  std::uint32_t doc;
  std::uint32_t tf;
  bool operator==(const Posting&) const = default;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct ScoredCandidate {
  std::string qa_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
  std::size_t doc = 0;   // corpus pair index
};

class InvertedIndex {
 public:
  // Documents are corpus pairs; doc id == pair index.
  static InvertedIndex build(const Corpus& corpus, IndexField field);

  std::span<const Posting> postings(TermId t) const;
  std::uint32_t doc_frequency(TermId t) const { return static_cast<std::uint32_t>(postings(t).size()); }
  std::uint32_t term_frequency(TermId t, std::uint32_t doc) const;
  std::uint32_t doc_length(std::uint32_t doc) const { return doc_len_.at(doc); }
  double avg_doc_length() const { return avgdl_; }
  std::size_t doc_count() const { return doc_len_.size(); }
  const std::string& doc_id(std::uint32_t doc) const { return ids_.at(doc); }
  // Euclidean norm of the raw-tf * ln(N/df) document vector.
  double tfidf_norm(std::uint32_t doc) const { return tfidf_norm_.at(doc); }
  double idf_vsm(TermId t) const;
  double idf_bm25(TermId t) const;
  IndexField field() const { return field_; }

  void save(const std::filesystem::path& path) const;

 private:
  IndexField field_ = IndexField::question_and_answer;
  std::vector<std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_len_;
  std::vector<std::string> ids_;
  std::vector<double> tfidf_norm_;
  double avgdl_ = 0.0;
};

InvertedIndex build_index(const Corpus& corpus, IndexField field);

// Sum over query tokens (each occurrence) of Okapi BM25 term scores.
double bm25_score(std::span<const TermId> query, std::uint32_t doc, const InvertedIndex& index,
                  const Bm25Params& params = {});

// Cosine of raw-tf * ln(Ndocs/df) vectors; 0 when either vector is zero.
double vsm_score(std::span<const TermId> query, std::uint32_t doc, const InvertedIndex& index);

// Top-k documents by BM25, ties by ascending qa_id. Only documents sharing at
// least one term with the query are returned.
std::vector<ScoredCandidate> retrieve_candidates(std::span<const TermId> query,
                                                 const InvertedIndex& index, std::size_t k,
                                                 const Bm25Params& params = {});

// Orders by non-increasing score then ascending qa_id, and assigns ranks.
void sort_and_rank(std::vector<ScoredCandidate>& list);

}  // namespace cqr
