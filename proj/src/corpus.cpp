#include "cqr/corpus.hpp"

#include <fstream>
#include <json.hpp>

namespace cqr {
namespace {

using nlohmann::json;

// Length in bytes of a Unicode whitespace sequence starting at text[i], 0 if none.
std::size_t whitespace_length(std::string_view text, std::size_t i) {
  const auto byte = [&](std::size_t k) -> unsigned char {
    return i + k < text.size() ? static_cast<unsigned char>(text[i + k]) : 0;
  };
  const unsigned char c = byte(0);
  if (c == ' ' || (c >= 0x09 && c <= 0x0D)) return 1;
  if (c == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;
  if (c == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;
  if (c == 0xE2 && byte(1) == 0x80) {
    const unsigned char d = byte(2);
    if ((d >= 0x80 && d <= 0x8A) || d == 0xA8 || d == 0xA9 || d == 0xAF) return 3;
  }
  if (c == 0xE2 && byte(1) == 0x81 && byte(2) == 0x9F) return 3;
  if (c == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;
  return 0;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

std::string line_error(const std::filesystem::path& path, std::size_t line, std::string_view what) {
  return path.string() + ":" + std::to_string(line) + ": " + std::string(what);
}

std::vector<std::string> tokens_field(const json& obj, const char* text_key, const char* tokens_key,
                                      const IngestOptions& options) {
  std::vector<std::string> tokens;
  if (auto it = obj.find(tokens_key); it != obj.end()) {
    if (!it->is_array()) throw std::invalid_argument(std::string(tokens_key) + " must be an array");
    for (const auto& tok : *it) {
      if (!tok.is_string()) throw std::invalid_argument(std::string(tokens_key) + " holds a non-string");
      tokens.push_back(tok.get<std::string>());
    }
  } else if (auto t = obj.find(text_key); t != obj.end()) {
    if (!t->is_string()) throw std::invalid_argument(std::string(text_key) + " must be a string");
    tokens = tokenize(t->get<std::string>(), options.mode);
  } else {
    throw std::invalid_argument(std::string("missing field ") + text_key);
  }
  if (!options.stopwords.empty()) {
    std::erase_if(tokens, [&](const std::string& tok) { return options.stopwords.contains(tok); });
  }
  return tokens;
}

std::string string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field ") + key);
  if (!it->is_string()) throw std::invalid_argument(std::string(key) + " must be a string");
  return it->get<std::string>();
}

bool blank(std::string_view line) {
  for (std::size_t i = 0; i < line.size();) {
    std::size_t n = whitespace_length(line, i);
    if (n == 0) return false;
    i += n;
  }
  return true;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, TokenizeMode mode) {
  std::vector<std::string> out;
  if (mode == TokenizeMode::pretokenized) {
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find(' ', start);
      if (end == std::string_view::npos) end = text.size();
      if (end > start) out.emplace_back(text.substr(start, end - start));
      start = end + 1;
    }
    return out;
  }
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  while (i < text.size()) {
    std::size_t ws = whitespace_length(text, i);
    if (ws > 0) {
      if (start != std::string_view::npos) {
        out.push_back(ascii_lower(text.substr(start, i - start)));
        start = std::string_view::npos;
      }
      i += ws;
    } else {
      if (start == std::string_view::npos) start = i;
      ++i;
    }
  }
  if (start != std::string_view::npos) out.push_back(ascii_lower(text.substr(start)));
  return out;
}

TermId Vocabulary::intern(std::string_view token) {
  auto [it, inserted] = ids_.try_emplace(std::string(token), static_cast<TermId>(tokens_.size()));
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

std::optional<TermId> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

CollectionStats::CollectionStats(std::vector<std::uint64_t> frequencies)
    : freq_(std::move(frequencies)) {
  for (auto f : freq_) total_ += f;
}

Corpus::Corpus(std::vector<QAPair> pairs, Vocabulary vocab, std::map<std::string, UserRecord> users)
    : pairs_(std::move(pairs)), vocab_(std::move(vocab)), users_(std::move(users)) {
  std::vector<std::uint64_t> freq(vocab_.size(), 0);
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const QAPair& p = pairs_[i];
    if (!by_id_.emplace(p.id, i).second) throw FormatError("duplicate QAPair id: " + p.id);
    for (TermId t : p.question) ++freq.at(t);
    for (TermId t : p.answer) ++freq.at(t);
    for (const std::string* u : {&p.asker, &p.answerer}) {
      if (!users_.contains(*u)) users_.emplace(*u, UserRecord{*u, 0});
    }
  }
  stats_ = CollectionStats(std::move(freq));
}

std::optional<std::size_t> Corpus::find_pair(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Corpus::best_answers(std::string_view user) const {
  auto it = users_.find(std::string(user));
  return it == users_.end() ? 0 : it->second.best_answer_count;
}

TokenSeq Corpus::encode_query(const std::vector<std::string>& tokens) const {
  TokenSeq out;
  out.reserve(tokens.size());
  std::map<std::string, TermId> unknown;
  for (const auto& tok : tokens) {
    if (auto id = vocab_.find(tok)) {
      out.push_back(*id);
    } else {
      auto [it, _] =
          unknown.try_emplace(tok, static_cast<TermId>(vocab_.size() + unknown.size()));
      out.push_back(it->second);
    }
  }
  return out;
}

Corpus ingest_corpus(const std::filesystem::path& qa_path,
                     const std::optional<std::filesystem::path>& users_path,
                     const IngestOptions& options) {
  std::ifstream in(qa_path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + qa_path.string());

  Vocabulary vocab;
  std::vector<QAPair> pairs;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    QAPair pair;
    std::vector<std::string> question;
    std::vector<std::string> answer;
    try {
      json obj = json::parse(line);
      if (!obj.is_object()) throw std::invalid_argument("expected a JSON object");
      pair.id = string_field(obj, "id");
      pair.asker = string_field(obj, "asker");
      pair.answerer = string_field(obj, "answerer");
      question = tokens_field(obj, "question", "question_tokens", options);
      answer = tokens_field(obj, "answer", "answer_tokens", options);
    } catch (const std::exception& e) {
      throw FormatError(line_error(qa_path, line_no, e.what()));
    }
    if (question.empty()) throw FormatError(line_error(qa_path, line_no, "empty question"));
    if (auto [it, inserted] = seen.emplace(pair.id, line_no); !inserted) {
      throw FormatError(line_error(qa_path, line_no,
                                   "duplicate QAPair id " + pair.id + " (first on line " +
                                       std::to_string(it->second) + ")"));
    }
    for (const auto& tok : question) pair.question.push_back(vocab.intern(tok));
    for (const auto& tok : answer) pair.answer.push_back(vocab.intern(tok));
    pairs.push_back(std::move(pair));
  }
  if (pairs.empty()) throw FormatError("empty corpus: " + qa_path.string());

  std::map<std::string, UserRecord> users;
  if (users_path) {
    std::ifstream uin(*users_path);
    if (!uin) throw std::runtime_error("cannot open users file: " + users_path->string());
    line_no = 0;
    while (std::getline(uin, line)) {
      ++line_no;
      if (blank(line)) continue;
      UserRecord rec;
      try {
        json obj = json::parse(line);
        if (!obj.is_object()) throw std::invalid_argument("expected a JSON object");
        rec.user_id = string_field(obj, "user");
        auto it = obj.find("best_answers");
        if (it == obj.end()) throw std::invalid_argument("missing field best_answers");
        if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
          throw std::invalid_argument("best_answers must be a non-negative integer");
        }
        rec.best_answer_count = it->get<std::uint64_t>();
      } catch (const std::exception& e) {
        throw FormatError(line_error(*users_path, line_no, e.what()));
      }
      if (!users.emplace(rec.user_id, rec).second) {
        throw FormatError(line_error(*users_path, line_no, "duplicate user " + rec.user_id));
      }
    }
  }
  return Corpus(std::move(pairs), std::move(vocab), std::move(users));
}

std::vector<QueryRecord> read_queries(const std::filesystem::path& path, const Corpus& corpus,
                                      const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open queries file: " + path.string());
  std::vector<QueryRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    QueryRecord rec;
    try {
      json obj = json::parse(line);
      if (!obj.is_object()) throw std::invalid_argument("expected a JSON object");
      rec.id = string_field(obj, "id");
      rec.tokens = corpus.encode_query(tokens_field(obj, "query", "tokens", options));
    } catch (const std::exception& e) {
      throw FormatError(line_error(path, line_no, e.what()));
    }
    if (rec.tokens.empty()) throw FormatError(line_error(path, line_no, "empty query"));
    if (!seen.insert(rec.id).second) {
      throw FormatError(line_error(path, line_no, "duplicate query id " + rec.id));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::set<std::string> read_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword file: " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& tok : tokenize(line, TokenizeMode::whitespace)) out.insert(std::move(tok));
  }
  return out;
}

double ml_prob(TermId w, std::span<const TermId> doc) {
  if (doc.empty()) throw std::invalid_argument("empty document");
  std::size_t count = 0;
  for (TermId t : doc) count += (t == w);
  return static_cast<double>(count) / static_cast<double>(doc.size());
}

double collection_prob(TermId w, const CollectionStats& stats) {
  const std::uint64_t f = stats.frequency(w);
  if (f == 0) return stats.unseen_floor();
  return static_cast<double>(f) / static_cast<double>(stats.total());
}

}  // namespace cqr
