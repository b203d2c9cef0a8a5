#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "cqr/ltr.hpp"
#include "support.hpp"

using namespace cqr;

TEST_CASE("lambdas for two documents") {
  const std::vector<int> same{1, 1};
  const auto zero = compute_lambdas(std::vector<double>{0.3, -0.2}, same, 10);
  CHECK(zero.lambda == std::vector<double>{0.0, 0.0});

  const std::vector<int> labels{2, 0};
  for (auto scores : {std::vector<double>{1.0, 0.0}, std::vector<double>{-0.5, 2.0}}) {
    const auto g = compute_lambdas(scores, labels, 10);
    CHECK(g.lambda[0] == -g.lambda[1]);
    CHECK(g.lambda[0] > 0.0);
  }
  // wrong order: ideal DCG 3, swapped DCG 3 / log2(3)
  const std::vector<double> wrong{0.0, 1.0};
  const auto g = compute_lambdas(wrong, labels, 2);
  const double rho = 1.0 / (1.0 + std::exp(0.0 - 1.0));
  const double delta = g.lambda[0] / rho;
  CHECK(delta == doctest::Approx(1.0 - 1.0 / std::log2(3.0)).epsilon(1e-14));
  CHECK(delta == doctest::Approx(0.369).epsilon(1e-3));
  CHECK(g.hessian[0] == doctest::Approx(delta * rho * (1 - rho)).epsilon(1e-14));
  CHECK(g.hessian[1] == g.hessian[0]);
}

TEST_CASE("lambdas match brute-force NDCG swaps and sum to zero") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng() % 14;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % 7) * 0.5 - 1.5;  // ties on purpose
      labels[i] = static_cast<int>(rng() % 3);
    }
    for (std::size_t k : {3u, 10u}) {
      const auto g = compute_lambdas(scores, labels, k);
      const auto ref = oracle::lambdas(scores, labels, k);
      double sum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(testing::close_rel(g.lambda[i], ref[i], 1e-12));
        CHECK(g.hessian[i] >= 0.0);
        sum += g.lambda[i];
      }
      CHECK(std::abs(sum) < 1e-9);
    }
  }
}

TEST_CASE("tree fitting") {
  FeatureMatrix x;
  x.cols = 1;
  for (int i = 0; i < 8; ++i) x.values.push_back(i);
  x.rows = 8;
  const std::vector<double> h(8, 0.5);

  const std::vector<double> flat(8, 0.25);
  const auto single = fit_tree(x, flat, h, {4, 1});
  CHECK(single.leaf_count() == 1);
  CHECK(single.predict(x.row(0)) == doctest::Approx(2.0 / (4.0 + 1e-9)).epsilon(1e-15));

  const std::vector<double> step{-1, -1, -1, -1, 1, 1, 1, 1};
  const auto split = fit_tree(x, step, h, {2, 1});
  REQUIRE(split.nodes().size() == 3);
  CHECK(split.nodes()[0].feature == 0);
  CHECK(split.nodes()[0].threshold == 3.5);
  CHECK(split.predict(x.row(0)) < 0);
  CHECK(split.predict(x.row(7)) > 0);

  const auto few = fit_tree(x, step, h, {4, 30});
  CHECK(few.leaf_count() == 1);
}

TEST_CASE("trees respect leaf caps and minimum cover") {
  std::mt19937_64 rng(3);
  FeatureMatrix x;
  x.cols = 3;
  x.rows = 300;
  std::vector<double> lambdas, h;
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (int c = 0; c < 3; ++c) x.values.push_back(static_cast<double>(rng() % 1000) / 1000.0);
    lambdas.push_back(std::sin(10 * x.values[r * 3]) + x.values[r * 3 + 1]);
    h.push_back(1.0);
  }
  for (std::size_t leaves : {2u, 4u, 7u}) {
    const auto t = fit_tree(x, lambdas, h, {leaves, 30});
    CHECK(t.leaf_count() <= leaves);
    CHECK(t.leaf_count() >= 2);
    for (const auto& node : t.nodes()) {
      if (node.is_leaf()) CHECK(node.cover >= 30);
    }
  }
  const auto t = fit_tree(x, lambdas, h, {4, 30});
  std::stringstream s;
  t.write(s);
  const auto back = RegressionTree::read(s, t.nodes().size());
  for (std::size_t r = 0; r < x.rows; ++r) CHECK(back.predict(x.row(r)) == t.predict(x.row(r)));
}

TEST_CASE("separable toy set reaches perfect training NDCG") {
  const auto data = testing::separable_dataset(20, 10, 7);
  REQUIRE(data.size() == 200);
  std::vector<double> curve;
  const auto model = train_lambdamart(data, TrainConfig{}, 1, [&](std::size_t, const LambdaMARTModel& m) {
    curve.push_back(dataset_ndcg(m, data, 10));
  });
  CHECK(dataset_ndcg(model, data, 10) == 1.0);
  REQUIRE(curve.size() == 50);
  double best = 0;
  for (double v : curve) {
    CHECK(v >= best - 0.01);
    best = std::max(best, v);
  }
  CHECK(model.trees.size() == 50);
  CHECK(model.config.trees == 50);
  CHECK(model.config.leaves == 4);
  CHECK(model.config.learning_rate == 0.2);
  CHECK(model.config.min_leaf == 30);
  CHECK(model.shrinkage == 0.2);
  CHECK(model.feature_count == 2);
}

TEST_CASE("training direction, errors and determinism") {
  RankingDataset two{{"q", "good", {1.0, 0.0}, 2}, {"q", "bad", {0.0, 1.0}, 0}};
  TrainConfig cfg;
  cfg.min_leaf = 1;
  const auto m = train_lambdamart(two, cfg);
  CHECK(m.predict(two[0].features) > m.predict(two[1].features));

  RankingDataset flat{{"q", "a", {1.0}, 1}, {"q", "b", {0.0}, 1}, {"r", "c", {0.5}, 1}};
  CHECK_THROWS_WITH(train_lambdamart(flat, cfg), doctest::Contains("no preference signal"));

  TrainConfig bad;
  bad.trees = 0;
  CHECK_THROWS(bad.validate());

  const auto data = testing::separable_dataset(5, 12, 2);
  cfg.trees = 10;
  cfg.min_leaf = 5;
  const auto a = train_lambdamart(data, cfg);
  const auto b = train_lambdamart(data, cfg);
  testing::TempDir dir;
  a.save(dir / "a.txt");
  b.save(dir / "b.txt");
  CHECK(testing::read_file(dir / "a.txt") == testing::read_file(dir / "b.txt"));
  const auto c = LambdaMARTModel::load(dir / "a.txt");
  c.save(dir / "c.txt");
  CHECK(testing::read_file(dir / "c.txt") == testing::read_file(dir / "a.txt"));
  CHECK(c.config == a.config);
  for (const auto& inst : data) CHECK(c.predict(inst.features) == a.predict(inst.features));
}

TEST_CASE("prediction") {
  LambdaMARTModel empty;
  empty.feature_count = 2;
  CHECK(empty.predict(std::vector<double>{1.0, 2.0}) == 0.0);
  CHECK_THROWS(empty.predict(std::vector<double>{1.0}));

  LambdaMARTModel one;
  one.feature_count = 1;
  one.shrinkage = 0.2;
  RegressionTree::Node leaf;
  leaf.value = 1.5;
  one.trees.push_back(RegressionTree({leaf}));
  CHECK(one.predict(std::vector<double>{9.0}) == 0.2 * 1.5);
  CHECK(one.predict(std::vector<double>{9.0}) == one.predict(std::vector<double>{9.0}));
}

TEST_CASE("letor lines") {
  const auto inst = parse_letor_line("2 qid:7 1:0.5 2:-3.1 #d42");
  CHECK(inst.label == 2);
  CHECK(inst.query_id == "7");
  CHECK(inst.features == std::vector<double>{0.5, -3.1});
  CHECK(inst.doc_id == "d42");
  CHECK_THROWS(parse_letor_line("2 qid:7 1:0.5 3:1 #d"));
  CHECK_THROWS(parse_letor_line("2 qid:7 2:0.5 #d"));
  CHECK_THROWS(parse_letor_line("3 qid:7 1:0.5 #d"));
  CHECK_THROWS(parse_letor_line("1 qid:7 1:abc #d"));
  CHECK_THROWS(parse_letor_line("1 7 1:0.5 #d"));

  testing::TempDir dir;
  testing::write_file(dir / "bad.letor", "1 qid:1 1:0.5 #a\n1 qid:1 1:0.5 2:0.1 #b\n");
  CHECK_THROWS_WITH(read_letor(dir / "bad.letor"), doctest::Contains(":2"));
}

TEST_CASE("letor round trip") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  RankingDataset data;
  for (int i = 0; i < 100; ++i) {
    RankingInstance inst;
    inst.query_id = "q" + std::to_string(i % 7);
    inst.doc_id = "doc" + std::to_string(i);
    inst.label = static_cast<int>(rng() % 3);
    for (int f = 0; f < 6; ++f) inst.features.push_back(f == 5 ? u(rng) * 1e-300 : u(rng));
    data.push_back(inst);
  }
  testing::TempDir dir;
  write_letor(data, dir / "x.letor");
  CHECK(read_letor(dir / "x.letor") == data);
  CHECK(parse_letor_line(format_letor_line(data[3])) == data[3]);
}

TEST_CASE("gain and discount") {
  CHECK(ndcg_gain(0) == 0.0);
  CHECK(ndcg_gain(2) == 3.0);
  CHECK(rank_discount(1) == 1.0);
  CHECK(rank_discount(3) == 0.5);
}
