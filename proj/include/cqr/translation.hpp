#pragma once

// IBM Model 1 word-translation probabilities P(w|t) learned by EM on the
// question/answer archive treated as a monolingual parallel corpus.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "cqr/corpus.hpp"

namespace cqr {

struct ParallelPair {
  TokenSeq source;  // t side
  TokenSeq target;  // w side
};

enum class Direction { q_to_a, a_to_q, pooled_both };

Direction parse_direction(std::string_view name);
std::string_view direction_name(Direction d);

// q_to_a: question is the source side. Pairs with an empty side are dropped.
std::vector<ParallelPair> make_parallel_pairs(const Corpus& corpus, Direction direction);

// Sparse P(w|t), rows keyed by source t, entries sorted by target w.
class TranslationTable {
 public:
  TranslationTable() = default;
  explicit TranslationTable(const std::map<TermId, std::map<TermId, double>>& rows);

  // Stored probability, 0 when (t, w) never co-occurred.
  double prob(TermId w, TermId t) const;
  std::span<const TermId> row_targets(TermId t) const;
  std::span<const double> row_probs(TermId t) const;
  std::vector<TermId> sources() const;
  std::size_t entry_count() const { return targets_.size(); }

  void save(const std::filesystem::path& path) const;
  static TranslationTable load(const std::filesystem::path& path);

  bool operator==(const TranslationTable&) const = default;

 private:
  friend class Ibm1Trainer;
  std::size_t find(TermId w, TermId t) const;  // flat index or npos

  std::vector<std::size_t> offsets_{0};  // size = source bound + 1
  std::vector<TermId> targets_;
  std::vector<double> probs_;
};

struct Ibm1Options {
  int iterations = 10;
  // Entries below this are removed after the final iteration and rows are
  // renormalized. 0 disables pruning.
  double prune_threshold = 1e-6;
  // Uniform initialization needs no randomness; kept for manifest echo.
  std::uint64_t seed = 0;
  // Called with iteration 0 for the uniform start, then after every M-step,
  // before pruning.
  std::function<void(int iteration, const TranslationTable&)> on_iteration;
};

TranslationTable train_ibm1(std::span<const ParallelPair> pairs, const Ibm1Options& options = {});

inline double translate_prob(const TranslationTable& table, TermId w, TermId t) {
  return table.prob(w, t);
}

// sum over pairs and target tokens w of ln sum_{t in source} P(w|t).
// Returns -infinity when some target word has no translation mass.
double corpus_log_likelihood(const TranslationTable& table, std::span<const ParallelPair> pairs);

}  // namespace cqr
