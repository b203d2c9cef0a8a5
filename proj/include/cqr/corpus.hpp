#pragma once

// Q&A archive ingestion, vocabulary interning and collection statistics.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cqr {

using TermId = std::uint32_t;
using TokenSeq = std::vector<TermId>;

// Raised for malformed input files; the message names the line where known.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TokenizeMode { whitespace, pretokenized };

// whitespace: split on Unicode whitespace, lowercase ASCII letters.
// pretokenized: split on single U+0020 verbatim; empty fields are dropped.
std::vector<std::string> tokenize(std::string_view text, TokenizeMode mode);

class Vocabulary {
 public:
  TermId intern(std::string_view token);
  std::optional<TermId> find(std::string_view token) const;
  const std::string& token(TermId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  bool contains(TermId id) const { return id < tokens_.size(); }

 private:
  std::unordered_map<std::string, TermId> ids_;
  std::vector<std::string> tokens_;
};

class CollectionStats {
 public:
  CollectionStats() = default;
  CollectionStats(std::vector<std::uint64_t> frequencies);

  std::uint64_t frequency(TermId w) const { return w < freq_.size() ? freq_[w] : 0; }
  std::uint64_t total() const { return total_; }
  std::size_t vocabulary_size() const { return freq_.size(); }
  // Probability assigned to words never seen in the collection.
  double unseen_floor() const { return 1.0 / (10.0 * static_cast<double>(total_)); }

 private:
  std::vector<std::uint64_t> freq_;
  std::uint64_t total_ = 0;
};

struct QAPair {
  std::string id;
  TokenSeq question;
  TokenSeq answer;  // may be empty
  std::string asker;
  std::string answerer;
};

struct QueryRecord {
  std::string id;
  TokenSeq tokens;
};

struct UserRecord {
  std::string user_id;
  std::uint64_t best_answer_count = 0;
};

struct IngestOptions {
  TokenizeMode mode = TokenizeMode::whitespace;
  std::set<std::string> stopwords;  // removed after tokenization; empty = keep all
};

class Corpus {
 public:
  Corpus(std::vector<QAPair> pairs, Vocabulary vocab, std::map<std::string, UserRecord> users);

  const std::vector<QAPair>& pairs() const { return pairs_; }
  const QAPair& pair(std::size_t index) const { return pairs_.at(index); }
  std::optional<std::size_t> find_pair(std::string_view id) const;
  const Vocabulary& vocabulary() const { return vocab_; }
  const CollectionStats& stats() const { return stats_; }
  const std::map<std::string, UserRecord>& users() const { return users_; }
  std::uint64_t best_answers(std::string_view user) const;

  // Encodes query text against the frozen vocabulary. Unknown tokens receive
  // ids >= vocabulary().size(), distinct per distinct unknown string.
  TokenSeq encode_query(const std::vector<std::string>& tokens) const;

 private:
  std::vector<QAPair> pairs_;
  Vocabulary vocab_;
  CollectionStats stats_;
  std::map<std::string, UserRecord> users_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

Corpus ingest_corpus(const std::filesystem::path& qa_path,
                     const std::optional<std::filesystem::path>& users_path,
                     const IngestOptions& options = {});

// Queries JSONL: {"id": str, "query": str} with optional "tokens" array.
std::vector<QueryRecord> read_queries(const std::filesystem::path& path, const Corpus& corpus,
                                      const IngestOptions& options = {});

std::set<std::string> read_stopwords(const std::filesystem::path& path);

// count(w, doc) / |doc|. Throws std::invalid_argument on an empty document.
double ml_prob(TermId w, std::span<const TermId> doc);

// Maximum-likelihood background probability with the unseen-word floor.
double collection_prob(TermId w, const CollectionStats& stats);

}  // namespace cqr
