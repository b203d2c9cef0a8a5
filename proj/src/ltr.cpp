#include "cqr/ltr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cqr {
namespace {

constexpr double kRidge = 1e-9;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad number: " + std::string(s));
  }
  return v;
}

// Indices of `scores` sorted by descending score, ties by index.
std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double ideal_dcg(std::span<const int> labels, std::size_t k) {
  std::vector<int> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double dcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, sorted.size()); ++r) {
    dcg += ndcg_gain(sorted[r]) * rank_discount(r + 1);
  }
  return dcg;
}

struct Split {
  bool valid = false;
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

Split best_split(const FeatureMatrix& x, std::span<const double> lambdas,
                 const std::vector<std::size_t>& rows, std::size_t min_leaf) {
  Split best;
  const std::size_t n = rows.size();
  if (n < 2 * min_leaf || n < 2) return best;
  double total = 0.0;
  double squares = 0.0;
  for (std::size_t r : rows) {
    total += lambdas[r];
    squares += lambdas[r] * lambdas[r];
  }
  const double base = total * total / static_cast<double>(n);
  const double min_gain = 1e-12 * squares;
  std::vector<std::size_t> sorted(rows);
  const std::size_t lo_pos = std::max<std::size_t>(min_leaf, 1);
  for (std::size_t f = 0; f < x.cols; ++f) {
    std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      const double va = x.at(a, f);
      const double vb = x.at(b, f);
      return va < vb || (va == vb && a < b);
    });
    double left = 0.0;
    for (std::size_t p = 1; p < n; ++p) {
      left += lambdas[sorted[p - 1]];
      if (p < lo_pos || n - p < lo_pos) continue;
      const double lv = x.at(sorted[p - 1], f);
      const double rv = x.at(sorted[p], f);
      if (!(lv < rv)) continue;
      const double right = total - left;
      const double gain = left * left / static_cast<double>(p) +
                          right * right / static_cast<double>(n - p) - base;
      if (gain > min_gain && gain > best.gain) {
        double thr = lv + (rv - lv) / 2.0;
        if (!(thr < rv)) thr = lv;
        best = {true, gain, static_cast<int>(f), thr};
      }
    }
  }
  return best;
}

double newton_value(std::span<const double> lambdas, std::span<const double> hessians,
                    const std::vector<std::size_t>& rows) {
  double g = 0.0;
  double h = 0.0;
  for (std::size_t r : rows) {
    g += lambdas[r];
    h += hessians[r];
  }
  return g / (h + kRidge);
}

}  // namespace

std::vector<QueryGroup> group_by_query(const RankingDataset& data) {
  std::vector<QueryGroup> groups;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [it, inserted] = index.try_emplace(data[i].query_id, groups.size());
    if (inserted) groups.push_back({data[i].query_id, {}});
    groups[it->second].rows.push_back(i);
  }
  return groups;
}

double ndcg_gain(int label) { return std::exp2(static_cast<double>(label)) - 1.0; }

double rank_discount(std::size_t rank) { return 1.0 / std::log2(1.0 + static_cast<double>(rank)); }

LambdaGradients compute_lambdas(std::span<const double> scores, std::span<const int> labels,
                                std::size_t truncation) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  if (scores.empty()) throw std::invalid_argument("no documents");
  const std::size_t n = scores.size();
  LambdaGradients out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  const double idcg = ideal_dcg(labels, truncation);
  if (idcg <= 0.0) return out;

  const auto order = order_by_score(scores);
  auto discount_at = [&](std::size_t pos) {
    return pos < truncation ? rank_discount(pos + 1) : 0.0;
  };
  const std::size_t top = std::min(truncation, n);
  for (std::size_t a = 0; a < top; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      std::size_t i = order[a];
      std::size_t j = order[b];
      if (labels[i] == labels[j]) continue;
      if (labels[i] < labels[j]) std::swap(i, j);
      const double delta = std::abs(ndcg_gain(labels[i]) - ndcg_gain(labels[j])) *
                           std::abs(discount_at(a) - discount_at(b)) / idcg;
      const double rho = 1.0 / (1.0 + std::exp(scores[i] - scores[j]));
      const double l = delta * rho;
      const double h = l * (1.0 - rho);
      out.lambda[i] += l;
      out.lambda[j] -= l;
      out.hessian[i] += h;
      out.hessian[j] += h;
    }
  }
  return out;
}

FeatureMatrix FeatureMatrix::from_dataset(const RankingDataset& data) {
  FeatureMatrix m;
  m.rows = data.size();
  m.cols = data.empty() ? 0 : data.front().features.size();
  m.values.reserve(m.rows * m.cols);
  for (const auto& inst : data) {
    if (inst.features.size() != m.cols) throw std::invalid_argument("ragged feature vectors");
    m.values.insert(m.values.end(), inst.features.begin(), inst.features.end());
  }
  return m;
}

double RegressionTree::predict(std::span<const double> features) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const Node& n = nodes_[i];
    i = static_cast<std::size_t>(features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                               : n.right);
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

void RegressionTree::write(std::ostream& out) const {
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (n.is_leaf()) {
      out << "L " << format_double(n.value) << '\n';
    } else {
      out << "S " << n.feature << ' ' << format_double(n.threshold) << '\n';
      stack.push_back(static_cast<std::size_t>(n.right));
      stack.push_back(static_cast<std::size_t>(n.left));
    }
  }
}

RegressionTree RegressionTree::read(std::istream& in, std::size_t node_count) {
  std::vector<Node> nodes;
  nodes.reserve(node_count);
  // Read preorder; each split node waits for its two children.
  struct Pending {
    std::size_t node;
    int filled;
  };
  std::vector<Pending> stack;
  std::string line;
  for (std::size_t i = 0; i < node_count; ++i) {
    if (!std::getline(in, line)) throw std::invalid_argument("truncated tree");
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    Node node;
    std::string num;
    if (kind == "S") {
      if (!(ss >> node.feature >> num) || node.feature < 0) throw std::invalid_argument("bad split line: " + line);
      node.threshold = parse_double(num);
    } else if (kind == "L") {
      if (!(ss >> num)) throw std::invalid_argument("bad leaf line: " + line);
      node.value = parse_double(num);
    } else {
      throw std::invalid_argument("bad tree line: " + line);
    }
    const std::size_t id = nodes.size();
    if (!stack.empty()) {
      Pending& parent = stack.back();
      if (parent.filled == 0) {
        nodes[parent.node].left = static_cast<int>(id);
      } else {
        nodes[parent.node].right = static_cast<int>(id);
      }
      if (++parent.filled == 2) stack.pop_back();
    } else if (id != 0) {
      throw std::invalid_argument("tree has nodes after its root closed");
    }
    nodes.push_back(node);
    if (!node.is_leaf()) stack.push_back({id, 0});
  }
  if (!stack.empty() || nodes.empty()) throw std::invalid_argument("incomplete tree");
  return RegressionTree(std::move(nodes));
}

RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> lambdas,
                        std::span<const double> hessians, const TreeParams& params) {
  if (lambdas.size() != x.rows || hessians.size() != x.rows) {
    throw std::invalid_argument("gradient length does not match the feature matrix");
  }
  if (params.max_leaves < 1) throw std::invalid_argument("max_leaves must be at least 1");

  struct Leaf {
    std::size_t node;
    std::vector<std::size_t> rows;
    Split split;
  };
  std::vector<RegressionTree::Node> nodes(1);
  std::vector<Leaf> leaves;
  {
    std::vector<std::size_t> all(x.rows);
    std::iota(all.begin(), all.end(), 0);
    Split s = best_split(x, lambdas, all, params.min_leaf);
    leaves.push_back({0, std::move(all), s});
  }
  while (leaves.size() < params.max_leaves) {
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].split.valid) continue;
      if (pick == leaves.size() || leaves[i].split.gain > leaves[pick].split.gain ||
          (leaves[i].split.gain == leaves[pick].split.gain && leaves[i].node < leaves[pick].node)) {
        pick = i;
      }
    }
    if (pick == leaves.size()) break;
    Leaf parent = std::move(leaves[pick]);
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : parent.rows) {
      (x.at(r, static_cast<std::size_t>(parent.split.feature)) <= parent.split.threshold ? left_rows
                                                                                         : right_rows)
          .push_back(r);
    }
    const std::size_t left_id = nodes.size();
    const std::size_t right_id = left_id + 1;
    nodes.resize(nodes.size() + 2);
    auto& pn = nodes[parent.node];
    pn.feature = parent.split.feature;
    pn.threshold = parent.split.threshold;
    pn.left = static_cast<int>(left_id);
    pn.right = static_cast<int>(right_id);
    Split ls = best_split(x, lambdas, left_rows, params.min_leaf);
    Split rs = best_split(x, lambdas, right_rows, params.min_leaf);
    leaves.push_back({left_id, std::move(left_rows), ls});
    leaves.push_back({right_id, std::move(right_rows), rs});
  }
  for (const Leaf& leaf : leaves) {
    nodes[leaf.node].value = newton_value(lambdas, hessians, leaf.rows);
    nodes[leaf.node].cover = leaf.rows.size();
  }
  // Split-node covers are the sums of their children.
  for (std::size_t i = nodes.size(); i-- > 0;) {
    if (!nodes[i].is_leaf()) {
      nodes[i].cover = nodes[static_cast<std::size_t>(nodes[i].left)].cover +
                       nodes[static_cast<std::size_t>(nodes[i].right)].cover;
    }
  }
  return RegressionTree(std::move(nodes));
}

void TrainConfig::validate() const {
  if (trees == 0 || leaves == 0 || min_leaf == 0 || ndcg_cutoff == 0 || !(learning_rate > 0.0)) {
    throw std::invalid_argument("LambdaMART configuration values must all be positive");
  }
}

double LambdaMARTModel::predict(std::span<const double> features) const {
  if (features.size() != feature_count) {
    throw std::invalid_argument("feature vector length " + std::to_string(features.size()) +
                                " does not match model (" + std::to_string(feature_count) + ")");
  }
  double score = 0.0;
  for (const auto& tree : trees) score += shrinkage * tree.predict(features);
  return score;
}

void LambdaMARTModel::write(std::ostream& out) const {
  out << "cqr-lambdamart 1\n";
  out << "features " << feature_count << '\n';
  out << "config " << config.trees << ' ' << config.leaves << ' ' << format_double(config.learning_rate)
      << ' ' << config.min_leaf << ' ' << config.ndcg_cutoff << '\n';
  out << "shrinkage " << format_double(shrinkage) << '\n';
  out << "seed " << seed << '\n';
  out << "trees " << trees.size() << '\n';
  for (const auto& tree : trees) {
    out << "tree " << tree.nodes().size() << '\n';
    tree.write(out);
  }
}

void LambdaMARTModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model: " + path.string());
  write(out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

LambdaMARTModel LambdaMARTModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model: " + path.string());
  auto expect = [&](const std::string& key) {
    std::string word;
    if (!(in >> word) || word != key) throw std::invalid_argument(path.string() + ": expected '" + key + "'");
  };
  LambdaMARTModel m;
  int version = 0;
  expect("cqr-lambdamart");
  in >> version;
  if (version != 1) throw std::invalid_argument(path.string() + ": unsupported model version");
  expect("features");
  in >> m.feature_count;
  expect("config");
  std::string lr;
  in >> m.config.trees >> m.config.leaves >> lr >> m.config.min_leaf >> m.config.ndcg_cutoff;
  m.config.learning_rate = parse_double(lr);
  expect("shrinkage");
  std::string sh;
  in >> sh;
  m.shrinkage = parse_double(sh);
  expect("seed");
  in >> m.seed;
  expect("trees");
  std::size_t count = 0;
  in >> count;
  for (std::size_t t = 0; t < count; ++t) {
    expect("tree");
    std::size_t nodes = 0;
    in >> nodes;
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    m.trees.push_back(RegressionTree::read(in, nodes));
  }
  if (!in) throw std::invalid_argument(path.string() + ": truncated model file");
  return m;
}

LambdaMARTModel train_lambdamart(const RankingDataset& data, const TrainConfig& config,
                                 std::uint64_t seed, const BoostingObserver& observer) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("empty training set");
  const bool any_difference = std::any_of(data.begin(), data.end(), [&](const RankingInstance& r) {
    return r.label != data.front().label;
  });
  if (!any_difference) throw std::invalid_argument("no preference signal");

  const FeatureMatrix x = FeatureMatrix::from_dataset(data);
  const auto groups = group_by_query(data);
  LambdaMARTModel model;
  model.shrinkage = config.learning_rate;
  model.feature_count = x.cols;
  model.config = config;
  model.seed = seed;

  std::vector<double> scores(data.size(), 0.0);
  std::vector<double> lambdas(data.size());
  std::vector<double> hessians(data.size());
  std::vector<double> gs;
  std::vector<int> gl;
  const TreeParams params{config.leaves, config.min_leaf};
  for (std::size_t round = 0; round < config.trees; ++round) {
    for (const auto& g : groups) {
      gs.clear();
      gl.clear();
      for (std::size_t r : g.rows) {
        gs.push_back(scores[r]);
        gl.push_back(data[r].label);
      }
      const auto grad = compute_lambdas(gs, gl, config.ndcg_cutoff);
      for (std::size_t i = 0; i < g.rows.size(); ++i) {
        lambdas[g.rows[i]] = grad.lambda[i];
        hessians[g.rows[i]] = grad.hessian[i];
      }
    }
    RegressionTree tree = fit_tree(x, lambdas, hessians, params);
    for (std::size_t r = 0; r < data.size(); ++r) scores[r] += model.shrinkage * tree.predict(x.row(r));
    model.trees.push_back(std::move(tree));
    if (observer) observer(round + 1, model);
  }
  return model;
}

double dataset_ndcg(const LambdaMARTModel& model, const RankingDataset& data, std::size_t k) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& g : group_by_query(data)) {
    std::vector<int> labels;
    for (std::size_t r : g.rows) labels.push_back(data[r].label);
    const double idcg = ideal_dcg(labels, k);
    if (idcg <= 0.0) continue;
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t r : g.rows) ranked.emplace_back(model.predict(data[r].features), r);
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return data[a.second].doc_id < data[b.second].doc_id;
    });
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
      dcg += ndcg_gain(data[ranked[i].second].label) * rank_discount(i + 1);
    }
    sum += dcg / idcg;
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

}  // namespace cqr
