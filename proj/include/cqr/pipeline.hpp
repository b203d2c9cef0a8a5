#pragma once

// End-to-end experiment: candidate retrieval, relevance and quality features,
// LambdaMART fusion, baseline runs and evaluation. Each stage writes its
// artifact atomically next to a manifest and is skipped when the manifest
// shows nothing changed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqr/corpus.hpp"
#include "cqr/eval.hpp"
#include "cqr/index.hpp"
#include "cqr/ltr.hpp"
#include "cqr/relevance.hpp"
#include "cqr/topics.hpp"
#include "cqr/translation.hpp"

namespace cqr {

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error("stage " + stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct FeatureOptions {
  std::size_t top_k = 500;
  Bm25Params bm25;
  bool combine_quality = false;  // one mean column instead of (asker, answerer)
  bool pad_candidates = false;   // top up lists shorter than kPadTarget with random pairs
  std::uint64_t seed = 1;
};

inline constexpr std::size_t kPadTarget = 20;

struct PipelineConfig {
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> users;
  std::filesystem::path queries;
  std::optional<std::filesystem::path> qrels;
  std::optional<std::filesystem::path> stopwords;
  std::optional<std::filesystem::path> ranker;  // apply this model instead of training
  std::filesystem::path out_dir = "cqr-out";

  TokenizeMode tokenize = TokenizeMode::whitespace;
  IndexField field = IndexField::question_and_answer;
  FeatureOptions features;
  Direction direction = Direction::pooled_both;
  int em_iterations = 10;
  double prune = 1e-6;
  LdaOptions lda;
  RelevanceConfig relevance;
  TrainConfig ltr;
  std::size_t depth = 10;
  int relevance_threshold = 1;
  std::uint64_t seed = 1;
};

struct QuerySplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

// Seeded 1:1 shuffle split; the train half gets floor(n / 2) queries.
QuerySplit split_queries(const std::vector<QueryRecord>& queries, std::uint64_t seed);

// BM25 candidates for one query, optionally padded with random pairs.
std::vector<ScoredCandidate> candidate_list(std::span<const TermId> query, const Corpus& corpus,
                                            const InvertedIndex& index, const FeatureOptions& options,
                                            std::uint64_t query_seed);

std::vector<std::string> feature_names(bool combine_quality);

// One instance per (query, candidate): F1..F4 then quality column(s); labels
// from qrels (unjudged = 0, no qrels = all 0).
RankingDataset extract_features(const Corpus& corpus, const InvertedIndex& index,
                                const RelevanceModel& relevance, std::span<const QueryRecord> queries,
                                const Qrels* qrels, const FeatureOptions& options);

// Reranks the candidates of every query with a relevance method.
RankedRun rank_with_method(Method method, const Corpus& corpus, const InvertedIndex& index,
                           const RelevanceModel& relevance, std::span<const QueryRecord> queries,
                           const FeatureOptions& options);

// Orders each query's instances by model score, ties by ascending doc id.
RankedRun rank_with_model(const LambdaMARTModel& model, const RankingDataset& data);

struct PipelineResult {
  MetricReport report;
  bool evaluated = false;
  std::filesystem::path report_path;
  std::vector<std::pair<std::string, std::filesystem::path>> runs;  // system name, run file
  std::filesystem::path ranker_path;
  std::size_t stages_run = 0;
  std::size_t stages_skipped = 0;
};

PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

}  // namespace cqr
