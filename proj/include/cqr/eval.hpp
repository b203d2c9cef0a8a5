#pragma once

// Graded judgments, truncated MAP / NDCG, TREC-style run files and
// comparison reports.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cqr {

class Qrels {
 public:
  // Throws on a duplicate (query, doc) or a grade outside {0,1,2}.
  void add(const std::string& query_id, const std::string& doc_id, int grade);
  // Unjudged pairs are grade 0.
  int grade(const std::string& query_id, const std::string& doc_id) const;
  bool has_query(const std::string& query_id) const { return judged_.contains(query_id); }
  const std::map<std::string, int>& judged(const std::string& query_id) const;
  const std::map<std::string, std::map<std::string, int>>& all() const { return judged_; }
  bool operator==(const Qrels&) const = default;

 private:
  std::map<std::string, std::map<std::string, int>> judged_;
};

// "<qid> 0 <docid> <grade>"
Qrels read_qrels(const std::filesystem::path& path);
void write_qrels(const Qrels& qrels, const std::filesystem::path& path);

struct RunEntry {
  std::string doc_id;
  double score = 0.0;
  bool operator==(const RunEntry&) const = default;
};

struct RankedQuery {
  std::string query_id;
  std::vector<RunEntry> docs;  // rank order
  bool operator==(const RankedQuery&) const = default;
};

struct RankedRun {
  std::string tag = "cqr";
  std::vector<RankedQuery> queries;
  bool operator==(const RankedRun&) const = default;
};

// "<qid> Q0 <docid> <rank> <score> <tag>"
void write_run(const RankedRun& run, const std::filesystem::path& path);
RankedRun read_run(const std::filesystem::path& path);

struct MetricValue {
  double value = 0.0;
  bool flagged = false;  // no relevant (AP) or no positive-gain (NDCG) judgments
};

// Relevance is grade >= threshold. Denominator min(R, k).
MetricValue average_precision_at_k(std::span<const std::string> ranked,
                                   const std::map<std::string, int>& judged, std::size_t k,
                                   int threshold = 1);

// Gain 2^grade - 1, discount 1 / log2(1 + rank), ideal from the judgments.
MetricValue ndcg_at_k(std::span<const std::string> ranked, const std::map<std::string, int>& judged,
                      std::size_t k);

struct QueryMetrics {
  std::string query_id;
  double ap = 0.0;
  double ndcg = 0.0;
  bool flagged = false;
};

struct SystemMetrics {
  std::string name;
  double map = 0.0;
  double ndcg = 0.0;
  std::vector<QueryMetrics> per_query;
};

struct MetricReport {
  std::size_t depth = 10;
  std::vector<SystemMetrics> systems;

  // Aligned table of MAP and NDCG followed by the pairwise MAP delta matrix.
  std::string render_table() const;
  // One JSON object per system and per (system, query).
  std::string render_jsonl() const;
};

// Throws when the run names a query that has no judgments at all.
SystemMetrics evaluate_run(const std::string& name, const RankedRun& run, const Qrels& qrels,
                           std::size_t k, int threshold = 1);

// Upper-triangular matrix of (column - row) * 100 MAP deltas, with a header
// row of absolute MAP values.
std::string render_comparison_table(const std::vector<std::pair<std::string, double>>& maps);

// "<name> <map>" lines; blank lines and '#' comments ignored.
std::vector<std::pair<std::string, double>> read_map_fixture(const std::filesystem::path& path);

}  // namespace cqr
