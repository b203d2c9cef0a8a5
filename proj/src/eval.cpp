#include "cqr/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cqr/corpus.hpp"

namespace cqr {
namespace {

std::vector<std::string> fields_of(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string f;
  while (ss >> f) out.push_back(f);
  return out;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::string line_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  return path.string() + ":" + std::to_string(line) + ": " + what;
}

template <typename T>
bool parse_exact(const std::string& s, T& v) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits, bool sign = false) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), sign ? "%+.*f" : "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

void Qrels::add(const std::string& query_id, const std::string& doc_id, int grade) {
  if (grade < 0 || grade > 2) throw std::invalid_argument("grade must be 0, 1 or 2");
  if (!judged_[query_id].emplace(doc_id, grade).second) {
    throw std::invalid_argument("duplicate judgment for (" + query_id + ", " + doc_id + ")");
  }
}

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
  auto q = judged_.find(query_id);
  if (q == judged_.end()) return 0;
  auto d = q->second.find(doc_id);
  return d == q->second.end() ? 0 : d->second;
}

const std::map<std::string, int>& Qrels::judged(const std::string& query_id) const {
  static const std::map<std::string, int> empty;
  auto q = judged_.find(query_id);
  return q == judged_.end() ? empty : q->second;
}

Qrels read_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open qrels: " + path.string());
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto f = fields_of(line);
    int grade = 0;
    if (f.size() != 4 || !parse_exact(f[3], grade)) {
      throw FormatError(line_error(path, line_no, "expected '<qid> 0 <docid> <grade>'"));
    }
    try {
      qrels.add(f[0], f[2], grade);
    } catch (const std::exception& e) {
      throw FormatError(line_error(path, line_no, e.what()));
    }
  }
  return qrels;
}

void write_qrels(const Qrels& qrels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write qrels: " + path.string());
  for (const auto& [q, docs] : qrels.all()) {
    for (const auto& [d, g] : docs) out << q << " 0 " << d << ' ' << g << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_run(const RankedRun& run, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write run: " + path.string());
  for (const auto& q : run.queries) {
    for (std::size_t i = 0; i < q.docs.size(); ++i) {
      out << q.query_id << " Q0 " << q.docs[i].doc_id << ' ' << (i + 1) << ' '
          << shortest(q.docs[i].score) << ' ' << run.tag << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

RankedRun read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run: " + path.string());
  RankedRun run;
  struct Row {
    std::size_t rank;
    RunEntry entry;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> rows;
  std::map<std::string, std::set<std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  bool have_tag = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto f = fields_of(line);
    std::size_t rank = 0;
    double score = 0.0;
    if (f.size() != 6 || f[1] != "Q0" || !parse_exact(f[3], rank) || rank == 0 ||
        !parse_exact(f[4], score)) {
      throw FormatError(line_error(path, line_no, "expected '<qid> Q0 <docid> <rank> <score> <tag>'"));
    }
    if (!seen[f[0]].insert(f[2]).second) {
      throw FormatError(line_error(path, line_no, "duplicate doc " + f[2] + " for query " + f[0]));
    }
    if (!have_tag) {
      run.tag = f[5];
      have_tag = true;
    }
    if (!rows.contains(f[0])) order.push_back(f[0]);
    rows[f[0]].push_back({rank, {f[2], score}});
  }
  for (const auto& qid : order) {
    auto& list = rows[qid];
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
    RankedQuery q{qid, {}};
    for (auto& r : list) q.docs.push_back(std::move(r.entry));
    run.queries.push_back(std::move(q));
  }
  return run;
}

MetricValue average_precision_at_k(std::span<const std::string> ranked,
                                   const std::map<std::string, int>& judged, std::size_t k,
                                   int threshold) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  std::size_t relevant_total = 0;
  for (const auto& [_, g] : judged) relevant_total += (g >= threshold);
  if (relevant_total == 0) return {0.0, true};
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r) {
    auto it = judged.find(ranked[r]);
    if (it != judged.end() && it->second >= threshold) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return {sum / static_cast<double>(std::min(relevant_total, k)), false};
}

MetricValue ndcg_at_k(std::span<const std::string> ranked, const std::map<std::string, int>& judged,
                      std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  auto gain = [](int g) { return std::exp2(static_cast<double>(g)) - 1.0; };
  auto discount = [](std::size_t rank) { return 1.0 / std::log2(1.0 + static_cast<double>(rank)); };
  std::vector<int> grades;
  for (const auto& [_, g] : judged) grades.push_back(g);
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double ideal = 0.0;
  for (std::size_t r = 0; r < std::min(k, grades.size()); ++r) ideal += gain(grades[r]) * discount(r + 1);
  if (ideal <= 0.0) return {0.0, true};
  double dcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r) {
    auto it = judged.find(ranked[r]);
    if (it != judged.end()) dcg += gain(it->second) * discount(r + 1);
  }
  return {dcg / ideal, false};
}

SystemMetrics evaluate_run(const std::string& name, const RankedRun& run, const Qrels& qrels,
                           std::size_t k, int threshold) {
  SystemMetrics sys;
  sys.name = name;
  std::vector<std::string> ids;
  for (const auto& q : run.queries) {
    if (!qrels.has_query(q.query_id)) throw std::invalid_argument("run references unknown query " + q.query_id);
    ids.clear();
    for (const auto& d : q.docs) ids.push_back(d.doc_id);
    const auto& judged = qrels.judged(q.query_id);
    const MetricValue ap = average_precision_at_k(ids, judged, k, threshold);
    const MetricValue nd = ndcg_at_k(ids, judged, k);
    sys.per_query.push_back({q.query_id, ap.value, nd.value, ap.flagged || nd.flagged});
  }
  if (!sys.per_query.empty()) {
    for (const auto& q : sys.per_query) {
      sys.map += q.ap;
      sys.ndcg += q.ndcg;
    }
    sys.map /= static_cast<double>(sys.per_query.size());
    sys.ndcg /= static_cast<double>(sys.per_query.size());
  }
  return sys;
}

std::string MetricReport::render_table() const {
  std::ostringstream out;
  std::size_t width = 8;
  for (const auto& s : systems) width = std::max(width, s.name.size() + 2);
  const std::string map_label = "MAP@" + std::to_string(depth);
  const std::string ndcg_label = "NDCG@" + std::to_string(depth);
  out << pad("system", width) << pad(map_label, 10) << pad(ndcg_label, 10) << "queries\n";
  for (const auto& s : systems) {
    out << pad(s.name, width) << pad(fixed(s.map, 4), 10) << pad(fixed(s.ndcg, 4), 10)
        << s.per_query.size() << '\n';
  }
  std::vector<std::pair<std::string, double>> maps;
  for (const auto& s : systems) maps.emplace_back(s.name, s.map);
  if (maps.size() >= 2) out << '\n' << render_comparison_table(maps);
  return out.str();
}

std::string MetricReport::render_jsonl() const {
  std::ostringstream out;
  for (const auto& s : systems) {
    nlohmann::json sys{{"system", s.name}, {"depth", depth}, {"map", s.map}, {"ndcg", s.ndcg},
                       {"queries", s.per_query.size()}};
    out << sys.dump() << '\n';
  }
  for (const auto& s : systems) {
    for (const auto& q : s.per_query) {
      nlohmann::json row{{"system", s.name}, {"query", q.query_id}, {"ap", q.ap},
                         {"ndcg", q.ndcg}, {"flagged", q.flagged}};
      out << row.dump() << '\n';
    }
  }
  return out.str();
}

std::string render_comparison_table(const std::vector<std::pair<std::string, double>>& maps) {
  std::size_t width = 8;
  for (const auto& [name, _] : maps) width = std::max(width, name.size() + 2);
  std::ostringstream out;
  out << pad("", width);
  for (const auto& [name, _] : maps) out << pad(name, width);
  out << '\n' << pad("MAP", width);
  for (const auto& [_, m] : maps) out << pad(fixed(m, 4), width);
  out << '\n';
  for (std::size_t r = 0; r + 1 < maps.size(); ++r) {
    out << pad(maps[r].first, width);
    for (std::size_t c = 0; c < maps.size(); ++c) {
      out << pad(c <= r ? "N/A" : fixed((maps[c].second - maps[r].second) * 100.0, 2, true), width);
    }
    out << '\n';
  }
  std::string text = out.str();
  // Drop trailing padding on every line.
  std::string trimmed;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    line.erase(line.find_last_not_of(' ') + 1);
    trimmed += line + '\n';
  }
  return trimmed;
}

std::vector<std::pair<std::string, double>> read_map_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture: " + path.string());
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line) || line.front() == '#') continue;
    const auto f = fields_of(line);
    double v = 0.0;
    if (f.size() != 2 || !parse_exact(f[1], v)) {
      throw FormatError(line_error(path, line_no, "expected '<name> <map>'"));
    }
    out.emplace_back(f[0], v);
  }
  return out;
}

}  // namespace cqr
