#include "cqr/translation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cqr {

Direction parse_direction(std::string_view name) {
  if (name == "q_to_a") return Direction::q_to_a;
  if (name == "a_to_q") return Direction::a_to_q;
  if (name == "pooled_both") return Direction::pooled_both;
  throw std::invalid_argument("unknown direction: " + std::string(name));
}

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::q_to_a:
      return "q_to_a";
    case Direction::a_to_q:
      return "a_to_q";
    case Direction::pooled_both:
      return "pooled_both";
  }
  return "?";
}

std::vector<ParallelPair> make_parallel_pairs(const Corpus& corpus, Direction direction) {
  std::vector<ParallelPair> out;
  for (const QAPair& p : corpus.pairs()) {
    if (p.question.empty() || p.answer.empty()) continue;
    if (direction != Direction::a_to_q) out.push_back({p.question, p.answer});
    if (direction != Direction::q_to_a) out.push_back({p.answer, p.question});
  }
  return out;
}

TranslationTable::TranslationTable(const std::map<TermId, std::map<TermId, double>>& rows) {
  const TermId bound = rows.empty() ? 0 : rows.rbegin()->first + 1;
  offsets_.assign(static_cast<std::size_t>(bound) + 1, 0);
  for (TermId t = 0; t < bound; ++t) {
    offsets_[t] = targets_.size();
    if (auto it = rows.find(t); it != rows.end()) {
      for (const auto& [w, p] : it->second) {
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("translation probability out of [0,1]");
        targets_.push_back(w);
        probs_.push_back(p);
      }
    }
  }
  offsets_[bound] = targets_.size();
}

std::size_t TranslationTable::find(TermId w, TermId t) const {
  if (static_cast<std::size_t>(t) + 1 >= offsets_.size()) return std::string::npos;
  auto first = targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[t]);
  auto last = targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[t + 1]);
  auto it = std::lower_bound(first, last, w);
  if (it == last || *it != w) return std::string::npos;
  return static_cast<std::size_t>(it - targets_.begin());
}

double TranslationTable::prob(TermId w, TermId t) const {
  const std::size_t i = find(w, t);
  return i == std::string::npos ? 0.0 : probs_[i];
}

std::span<const TermId> TranslationTable::row_targets(TermId t) const {
  if (static_cast<std::size_t>(t) + 1 >= offsets_.size()) return {};
  return std::span<const TermId>(targets_).subspan(offsets_[t], offsets_[t + 1] - offsets_[t]);
}

std::span<const double> TranslationTable::row_probs(TermId t) const {
  if (static_cast<std::size_t>(t) + 1 >= offsets_.size()) return {};
  return std::span<const double>(probs_).subspan(offsets_[t], offsets_[t + 1] - offsets_[t]);
}

std::vector<TermId> TranslationTable::sources() const {
  std::vector<TermId> out;
  for (TermId t = 0; t + 1 < offsets_.size(); ++t) {
    if (offsets_[t + 1] > offsets_[t]) out.push_back(t);
  }
  return out;
}

void TranslationTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write translation table: " + path.string());
  out.precision(17);
  for (TermId t = 0; t + 1 < offsets_.size(); ++t) {
    for (std::size_t i = offsets_[t]; i < offsets_[t + 1]; ++i) {
      out << t << ' ' << targets_[i] << ' ' << probs_[i] << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TranslationTable TranslationTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open translation table: " + path.string());
  TranslationTable table;
  table.offsets_.clear();
  std::string line;
  std::size_t line_no = 0;
  long long prev_t = -1;
  long long prev_w = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    long long t = 0;
    long long w = 0;
    double p = 0.0;
    std::string extra;
    if (!(ss >> t >> w >> p) || (ss >> extra) || t < 0 || w < 0 || !(p >= 0.0 && p <= 1.0)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": malformed entry");
    }
    if (t < prev_t || (t == prev_t && w <= prev_w)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": entries not sorted by (t, w)");
    }
    while (static_cast<long long>(table.offsets_.size()) <= t) table.offsets_.push_back(table.targets_.size());
    table.targets_.push_back(static_cast<TermId>(w));
    table.probs_.push_back(p);
    prev_t = t;
    prev_w = w;
  }
  table.offsets_.push_back(table.targets_.size());
  return table;
}

class Ibm1Trainer {
 public:
  explicit Ibm1Trainer(std::span<const ParallelPair> pairs) : pairs_(pairs) {}

  TranslationTable run(const Ibm1Options& options) {
    init_uniform();
    if (options.on_iteration) options.on_iteration(0, table_);
    std::vector<double> counts(table_.probs_.size());
    std::vector<std::size_t> slots;
    for (int iter = 1; iter <= options.iterations; ++iter) {
      std::fill(counts.begin(), counts.end(), 0.0);
      for (const ParallelPair& pair : pairs_) {
        slots.resize(pair.source.size());
        for (TermId w : pair.target) {
          double denom = 0.0;
          for (std::size_t i = 0; i < pair.source.size(); ++i) {
            slots[i] = table_.find(w, pair.source[i]);
            denom += table_.probs_[slots[i]];
          }
          for (std::size_t i = 0; i < pair.source.size(); ++i) {
            counts[slots[i]] += table_.probs_[slots[i]] / denom;
          }
        }
      }
      normalize_rows(counts);
      table_.probs_ = counts;
      if (options.on_iteration) options.on_iteration(iter, table_);
    }
    if (options.prune_threshold > 0.0) prune(options.prune_threshold);
    return std::move(table_);
  }

 private:
  void init_uniform() {
    TermId bound = 0;
    for (const auto& p : pairs_) {
      for (TermId t : p.source) bound = std::max(bound, t + 1);
    }
    std::vector<std::vector<TermId>> co(bound);
    for (const auto& p : pairs_) {
      for (TermId t : p.source) co[t].insert(co[t].end(), p.target.begin(), p.target.end());
    }
    table_.offsets_.assign(static_cast<std::size_t>(bound) + 1, 0);
    for (TermId t = 0; t < bound; ++t) {
      auto& row = co[t];
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      table_.offsets_[t] = table_.targets_.size();
      const double uniform = row.empty() ? 0.0 : 1.0 / static_cast<double>(row.size());
      for (TermId w : row) {
        table_.targets_.push_back(w);
        table_.probs_.push_back(uniform);
      }
      std::vector<TermId>().swap(row);
    }
    table_.offsets_[bound] = table_.targets_.size();
  }

  void normalize_rows(std::vector<double>& values) const {
    for (std::size_t t = 0; t + 1 < table_.offsets_.size(); ++t) {
      const std::size_t lo = table_.offsets_[t];
      const std::size_t hi = table_.offsets_[t + 1];
      double sum = 0.0;
      for (std::size_t i = lo; i < hi; ++i) sum += values[i];
      if (sum <= 0.0) continue;
      for (std::size_t i = lo; i < hi; ++i) values[i] /= sum;
    }
  }

  void prune(double threshold) {
    TranslationTable pruned;
    pruned.offsets_.assign(table_.offsets_.size(), 0);
    for (std::size_t t = 0; t + 1 < table_.offsets_.size(); ++t) {
      const std::size_t lo = table_.offsets_[t];
      const std::size_t hi = table_.offsets_[t + 1];
      pruned.offsets_[t] = pruned.targets_.size();
      if (lo == hi) continue;
      std::size_t best = lo;
      for (std::size_t i = lo; i < hi; ++i) {
        if (table_.probs_[i] > table_.probs_[best]) best = i;
      }
      double kept = 0.0;
      const std::size_t start = pruned.targets_.size();
      for (std::size_t i = lo; i < hi; ++i) {
        if (table_.probs_[i] >= threshold || i == best) {
          pruned.targets_.push_back(table_.targets_[i]);
          pruned.probs_.push_back(table_.probs_[i]);
          kept += table_.probs_[i];
        }
      }
      for (std::size_t i = start; i < pruned.probs_.size(); ++i) pruned.probs_[i] /= kept;
    }
    pruned.offsets_.back() = pruned.targets_.size();
    table_ = std::move(pruned);
  }

  std::span<const ParallelPair> pairs_;
  TranslationTable table_;
};

TranslationTable train_ibm1(std::span<const ParallelPair> pairs, const Ibm1Options& options) {
  if (pairs.empty()) throw std::invalid_argument("IBM Model 1 needs at least one parallel pair");
  if (options.iterations < 1) throw std::invalid_argument("EM iterations must be at least 1");
  for (const auto& p : pairs) {
    if (p.source.empty() || p.target.empty()) {
      throw std::invalid_argument("parallel pair with an empty side");
    }
  }
  return Ibm1Trainer(pairs).run(options);
}

double corpus_log_likelihood(const TranslationTable& table, std::span<const ParallelPair> pairs) {
  double ll = 0.0;
  for (const ParallelPair& pair : pairs) {
    for (TermId w : pair.target) {
      double mass = 0.0;
      for (TermId t : pair.source) mass += table.prob(w, t);
      if (mass <= 0.0) return -std::numeric_limits<double>::infinity();
      ll += std::log(mass);
    }
  }
  return ll;
}

}  // namespace cqr
