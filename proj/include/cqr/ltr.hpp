#pragma once

// LambdaMART: gradient-boosted regression trees fit to pairwise lambda
// gradients weighted by |delta NDCG@k|.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace cqr {

struct RankingInstance {
  std::string query_id;
  std::string doc_id;
  std::vector<double> features;
  int label = 0;  // 0, 1 or 2

  bool operator==(const RankingInstance&) const = default;
};

using RankingDataset = std::vector<RankingInstance>;

struct QueryGroup {
  std::string query_id;
  std::vector<std::size_t> rows;
};

// Groups rows by query id in order of first appearance.
std::vector<QueryGroup> group_by_query(const RankingDataset& data);

// LETOR / SVMlight ranking format:
//   <label> qid:<qid> <i>:<value> ... #<docid>
// Feature indices are 1-based, contiguous and strictly ascending.
RankingInstance parse_letor_line(std::string_view line);
std::string format_letor_line(const RankingInstance& inst);
RankingDataset read_letor(const std::filesystem::path& path);
void write_letor(const RankingDataset& data, const std::filesystem::path& path);

// 2^label - 1
double ndcg_gain(int label);
// 1 / log2(1 + rank), rank 1-based
double rank_discount(std::size_t rank);

struct LambdaGradients {
  std::vector<double> lambda;
  std::vector<double> hessian;
};

// Lambdas for one query. Current positions come from sorting scores
// descending (ties by input order); sigmoid steepness is 1.
LambdaGradients compute_lambdas(std::span<const double> scores, std::span<const int> labels,
                                std::size_t truncation);

// Row-major dense matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols, cols);
  }
  static FeatureMatrix from_dataset(const RankingDataset& data);
};

class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;   // rows with x[feature] <= threshold
    int right = -1;
    double value = 0.0;
    std::size_t cover = 0;  // training rows reaching the node (not serialized)

    bool is_leaf() const { return feature < 0; }
  };

  RegressionTree() = default;
  explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> features) const;
  std::size_t leaf_count() const;
  const std::vector<Node>& nodes() const { return nodes_; }

  // Preorder lines: "S <feature> <threshold>" or "L <value>".
  void write(std::ostream& out) const;
  static RegressionTree read(std::istream& in, std::size_t node_count);

 private:
  std::vector<Node> nodes_{Node{}};
};

struct TreeParams {
  std::size_t max_leaves = 4;
  std::size_t min_leaf = 30;
};

// Leaf-wise greedy growth maximizing the reduction in squared error of the
// lambdas. Leaf value is the Newton step sum(lambda) / (sum(hessian) + 1e-9).
// Split ties go to the lowest feature index, then the lowest threshold.
RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> lambdas,
                        std::span<const double> hessians, const TreeParams& params);

struct TrainConfig {
  std::size_t trees = 50;
  std::size_t leaves = 4;
  double learning_rate = 0.2;
  std::size_t min_leaf = 30;
  std::size_t ndcg_cutoff = 10;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

class LambdaMARTModel {
 public:
  std::vector<RegressionTree> trees;
  double shrinkage = 0.0;
  std::size_t feature_count = 0;
  TrainConfig config;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument when the feature length does not match.
  double predict(std::span<const double> features) const;

  void save(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;
  static LambdaMARTModel load(const std::filesystem::path& path);
};

using BoostingObserver = std::function<void(std::size_t round, const LambdaMARTModel& model)>;

// Throws "no preference signal" when every label in the dataset is equal.
LambdaMARTModel train_lambdamart(const RankingDataset& data, const TrainConfig& config,
                                 std::uint64_t seed = 0, const BoostingObserver& observer = {});

// Mean NDCG@k of the model's ordering over queries whose ideal DCG is
// positive; ties in predicted score are ordered by ascending doc id.
double dataset_ndcg(const LambdaMARTModel& model, const RankingDataset& data, std::size_t k);

}  // namespace cqr
