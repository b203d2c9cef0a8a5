#include "cqr/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <set>

#include "cqr/manifest.hpp"
#include "cqr/quality.hpp"

namespace cqr {
namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string num(std::uint64_t v) { return std::to_string(v); }

struct StageRunner {
  std::ostream* log;
  PipelineResult* result;

  // Produces `artifact` unless its manifest shows the same recipe. Returns
  // true when the stage actually ran.
  bool run(const std::string& stage, const std::filesystem::path& artifact, Manifest manifest,
           const std::function<void(const std::filesystem::path&)>& produce) {
    manifest.stage = stage;
    bool built = false;
    try {
      built = build_artifact(manifest, artifact, produce);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
    if (!built) {
      if (log) *log << "[" << stage << "] up to date: " << artifact.string() << '\n';
      ++result->stages_skipped;
      return false;
    }
    if (log) *log << "[" << stage << "] wrote " << artifact.string() << '\n';
    ++result->stages_run;
    return true;
  }
};

template <typename Fn>
auto guarded(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void add_input(Manifest& m, const std::string& name, const std::optional<std::filesystem::path>& path) {
  m.inputs[name] = path ? content_hash(*path) : "none";
}

std::vector<QueryRecord> select(const std::vector<QueryRecord>& all, const std::vector<std::string>& ids) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<QueryRecord> out;
  for (const auto& q : all) {
    if (wanted.contains(q.id)) out.push_back(q);
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::size_t index) {
  // splitmix64 step
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

QuerySplit split_queries(const std::vector<QueryRecord>& queries, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& q : queries) ids.push_back(q.id);
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(ids[i - 1], ids[std::min(j, i - 1)]);
  }
  QuerySplit split;
  const std::size_t half = ids.size() / 2;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(half));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(half), ids.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<ScoredCandidate> candidate_list(std::span<const TermId> query, const Corpus& corpus,
                                            const InvertedIndex& index, const FeatureOptions& options,
                                            std::uint64_t query_seed) {
  auto list = retrieve_candidates(query, index, options.top_k, options.bm25);
  const std::size_t target = std::min({kPadTarget, options.top_k, corpus.pairs().size()});
  if (options.pad_candidates && list.size() < target) {
    std::set<std::size_t> have;
    for (const auto& c : list) have.insert(c.doc);
    std::vector<std::size_t> pool;
    for (std::size_t d = 0; d < corpus.pairs().size(); ++d) {
      if (!have.contains(d)) pool.push_back(d);
    }
    std::mt19937_64 rng(query_seed);
    while (list.size() < target && !pool.empty()) {
      auto j = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pool.size())),
                        pool.size() - 1);
      const std::size_t d = pool[j];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
      list.push_back({corpus.pair(d).id, 0.0, list.size() + 1, d});
    }
  }
  return list;
}

std::vector<std::string> feature_names(bool combine_quality) {
  std::vector<std::string> names{"f1_question_lm", "f2_translation", "f3_topic", "f4_answer_lm"};
  if (combine_quality) {
    names.emplace_back("f5_quality_mean");
  } else {
    names.emplace_back("f5_asker_authority");
    names.emplace_back("f5_answerer_authority");
  }
  return names;
}

RankingDataset extract_features(const Corpus& corpus, const InvertedIndex& index,
                                const RelevanceModel& relevance, std::span<const QueryRecord> queries,
                                const Qrels* qrels, const FeatureOptions& options) {
  RankingDataset data;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const QueryRecord& q = queries[qi];
    const auto prepared = relevance.prepare(q.tokens);
    const auto candidates = candidate_list(q.tokens, corpus, index, options, mix_seed(options.seed, qi));
    for (const auto& c : candidates) {
      const QAPair& pair = corpus.pair(c.doc);
      const RelevanceFeatures f = relevance.features(prepared, c.doc);
      const QualityFeature quality = quality_feature(pair, corpus);
      RankingInstance inst;
      inst.query_id = q.id;
      inst.doc_id = pair.id;
      inst.features = {f.f1, f.f2, f.f3, f.f4};
      if (options.combine_quality) {
        inst.features.push_back(quality.mean());
      } else {
        inst.features.push_back(quality.s_asker);
        inst.features.push_back(quality.s_answerer);
      }
      inst.label = qrels ? qrels->grade(q.id, pair.id) : 0;
      data.push_back(std::move(inst));
    }
  }
  return data;
}

RankedRun rank_with_method(Method method, const Corpus& corpus, const InvertedIndex& index,
                           const RelevanceModel& relevance, std::span<const QueryRecord> queries,
                           const FeatureOptions& options) {
  RankedRun run;
  run.tag = std::string(method_name(method));
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const QueryRecord& q = queries[qi];
    const auto prepared = relevance.prepare(q.tokens);
    auto candidates = candidate_list(q.tokens, corpus, index, options, mix_seed(options.seed, qi));
    auto ranked = rank_candidates(
        [&](const QAPair& pair) {
          return relevance.score(method, prepared, static_cast<std::size_t>(&pair - corpus.pairs().data()));
        },
        corpus, std::move(candidates));
    RankedQuery rq{q.id, {}};
    for (const auto& c : ranked) rq.docs.push_back({c.qa_id, c.score});
    run.queries.push_back(std::move(rq));
  }
  return run;
}

RankedRun rank_with_model(const LambdaMARTModel& model, const RankingDataset& data) {
  RankedRun run;
  run.tag = "lambdamart";
  for (const auto& g : group_by_query(data)) {
    std::vector<ScoredCandidate> list;
    for (std::size_t r : g.rows) list.push_back({data[r].doc_id, model.predict(data[r].features), 0, r});
    sort_and_rank(list);
    RankedQuery rq{g.query_id, {}};
    for (const auto& c : list) rq.docs.push_back({c.qa_id, c.score});
    run.queries.push_back(std::move(rq));
  }
  return run;
}

PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log) {
  PipelineResult result;
  StageRunner stages{log, &result};
  const auto& out = config.out_dir;
  std::filesystem::create_directories(out / "runs");

  const bool train_mode = !config.ranker.has_value();
  if (train_mode && !config.qrels) {
    throw StageError("train-ranker", "no preference signal source (qrels required to train the ranker)");
  }

  // ingest
  IngestOptions ingest;
  ingest.mode = config.tokenize;
  if (config.stopwords) ingest.stopwords = read_stopwords(*config.stopwords);
  const Corpus corpus = guarded("ingest", [&] { return ingest_corpus(config.corpus, config.users, ingest); });
  const auto queries = guarded("ingest", [&] { return read_queries(config.queries, corpus, ingest); });
  const std::optional<Qrels> qrels =
      config.qrels ? std::optional<Qrels>(guarded("ingest", [&] { return read_qrels(*config.qrels); }))
                   : std::nullopt;

  Manifest base;
  add_input(base, "corpus", config.corpus);
  add_input(base, "users", config.users);
  add_input(base, "stopwords", config.stopwords);
  base.flags["tokenize"] = config.tokenize == TokenizeMode::whitespace ? "whitespace" : "pretokenized";
  base.seed = config.seed;

  {
    Manifest m = base;
    stages.run("ingest", out / "vocab.txt", m, [&](const std::filesystem::path& p) {
      std::ofstream f(p);
      const auto& vocab = corpus.vocabulary();
      for (TermId t = 0; t < vocab.size(); ++t) {
        f << t << '\t' << vocab.token(t) << '\t' << corpus.stats().frequency(t) << '\n';
      }
      if (!f) throw std::runtime_error("write failed");
    });
  }

  // split
  QuerySplit split;
  if (train_mode) {
    split = split_queries(queries, config.seed);
  } else {
    for (const auto& q : queries) split.test.push_back(q.id);
  }
  {
    Manifest m;
    add_input(m, "queries", config.queries);
    m.flags["mode"] = train_mode ? "train" : "apply";
    m.seed = config.seed;
    stages.run("split", out / "split.txt", m, [&](const std::filesystem::path& p) {
      std::ofstream f(p);
      for (const auto& id : split.train) f << "train " << id << '\n';
      for (const auto& id : split.test) f << "test " << id << '\n';
    });
  }
  const auto train_queries = select(queries, split.train);
  const auto test_queries = select(queries, split.test);

  // index
  const InvertedIndex index = guarded("build-index", [&] { return build_index(corpus, config.field); });
  {
    Manifest m = base;
    m.flags["field"] = std::string(index_field_name(config.field));
    stages.run("build-index", out / "index.txt", m,
               [&](const std::filesystem::path& p) { index.save(p); });
  }

  // translation model
  const auto tm_path = out / "translation.txt";
  {
    Manifest m = base;
    m.flags["direction"] = std::string(direction_name(config.direction));
    m.flags["em_iters"] = num(static_cast<std::uint64_t>(config.em_iterations));
    m.flags["prune"] = num(config.prune);
    stages.run("train-tm", tm_path, m, [&](const std::filesystem::path& p) {
      const auto pairs = make_parallel_pairs(corpus, config.direction);
      Ibm1Options opt;
      opt.iterations = config.em_iterations;
      opt.prune_threshold = config.prune;
      opt.seed = config.seed;
      train_ibm1(pairs, opt).save(p);
    });
  }
  const TranslationTable table = guarded("train-tm", [&] { return TranslationTable::load(tm_path); });

  // topic model
  const auto lda_path = out / "lda.txt";
  {
    Manifest m = base;
    m.flags["topics"] = num(static_cast<std::uint64_t>(config.lda.topics));
    m.flags["alpha"] = num(config.lda.resolved_alpha());
    m.flags["beta"] = num(config.lda.beta);
    m.flags["gibbs_iters"] = num(static_cast<std::uint64_t>(config.lda.iterations));
    m.seed = config.lda.seed;
    stages.run("train-lda", lda_path, m, [&](const std::filesystem::path& p) {
      const auto docs = topic_training_docs(corpus);
      train_lda(docs, corpus.vocabulary().size(), config.lda).save(p);
    });
  }
  const TopicModel topics = guarded("train-lda", [&] { return TopicModel::load(lda_path); });

  const RelevanceModel relevance(corpus, index, table, topics, config.relevance);

  Manifest feat = base;
  add_input(feat, "queries", config.queries);
  add_input(feat, "qrels", config.qrels);
  feat.inputs["translation"] = content_hash(tm_path);
  feat.inputs["lda"] = content_hash(lda_path);
  feat.inputs["split"] = content_hash(out / "split.txt");
  feat.flags["field"] = std::string(index_field_name(config.field));
  feat.flags["top_k"] = num(static_cast<std::uint64_t>(config.features.top_k));
  feat.flags["k1"] = num(config.features.bm25.k1);
  feat.flags["b"] = num(config.features.bm25.b);
  feat.flags["combine_quality"] = config.features.combine_quality ? "1" : "0";
  feat.flags["pad_candidates"] = config.features.pad_candidates ? "1" : "0";
  feat.flags["mu"] = num(config.relevance.mu.mu1) + "," + num(config.relevance.mu.mu2) + "," +
                     num(config.relevance.mu.mu3) + "," + num(config.relevance.mu.mu4);
  feat.flags["rescale_weights"] = config.relevance.rescale_weights ? "1" : "0";
  feat.flags["fold_in"] = num(static_cast<std::uint64_t>(config.relevance.fold_in.burn_in)) + "," +
                          num(static_cast<std::uint64_t>(config.relevance.fold_in.samples)) + "," +
                          num(config.relevance.fold_in.seed);

  const Qrels* qrels_ptr = qrels ? &*qrels : nullptr;
  const auto train_feat_path = out / "features.train.letor";
  const auto test_feat_path = out / "features.test.letor";
  if (train_mode) {
    Manifest m = feat;
    m.flags["queries"] = "train";
    stages.run("features", train_feat_path, m, [&](const std::filesystem::path& p) {
      write_letor(extract_features(corpus, index, relevance, train_queries, qrels_ptr, config.features), p);
    });
  }
  {
    Manifest m = feat;
    m.flags["queries"] = "test";
    stages.run("features", test_feat_path, m, [&](const std::filesystem::path& p) {
      write_letor(extract_features(corpus, index, relevance, test_queries, qrels_ptr, config.features), p);
    });
  }

  // ranker
  std::filesystem::path ranker_path = config.ranker ? *config.ranker : out / "ranker.txt";
  if (train_mode) {
    Manifest m;
    m.inputs["train_features"] = content_hash(train_feat_path);
    m.flags["trees"] = num(static_cast<std::uint64_t>(config.ltr.trees));
    m.flags["leaves"] = num(static_cast<std::uint64_t>(config.ltr.leaves));
    m.flags["learning_rate"] = num(config.ltr.learning_rate);
    m.flags["min_leaf"] = num(static_cast<std::uint64_t>(config.ltr.min_leaf));
    m.flags["ndcg_cutoff"] = num(static_cast<std::uint64_t>(config.ltr.ndcg_cutoff));
    m.seed = config.seed;
    stages.run("train-ranker", ranker_path, m, [&](const std::filesystem::path& p) {
      const auto train = read_letor(train_feat_path);
      train_lambdamart(train, config.ltr, config.seed).save(p);
    });
  }
  result.ranker_path = ranker_path;
  const LambdaMARTModel ranker = guarded("train-ranker", [&] { return LambdaMARTModel::load(ranker_path); });

  // runs
  const std::vector<std::pair<std::string, Method>> baselines{
      {"VSM", Method::vsm}, {"BM25", Method::bm25}, {"LM", Method::lm},
      {"TLM", Method::tlm}, {"T2LM", Method::t2lm}, {"T2LM+", Method::t2lm_plus}};
  auto run_file = [&](const std::string& name) {
    std::string f;
    for (char c : name) f += c == '+' ? std::string("_plus") : std::string(1, static_cast<char>(std::tolower(c)));
    return out / "runs" / (f + ".run");
  };
  for (const auto& [name, method] : baselines) {
    Manifest m = feat;
    m.flags["queries"] = "test";
    m.flags["method"] = std::string(method_name(method));
    const auto path = run_file(name);
    stages.run("rank", path, m, [&](const std::filesystem::path& p) {
      write_run(rank_with_method(method, corpus, index, relevance, test_queries, config.features), p);
    });
    result.runs.emplace_back(name, path);
  }
  {
    Manifest m;
    m.inputs["test_features"] = content_hash(test_feat_path);
    m.inputs["ranker"] = content_hash(ranker_path);
    const auto path = run_file("T2LM+5");
    stages.run("rank", path, m, [&](const std::filesystem::path& p) {
      write_run(rank_with_model(ranker, read_letor(test_feat_path)), p);
    });
    result.runs.emplace_back("T2LM+5", path);
  }

  // evaluate
  if (qrels) {
    MetricReport report;
    report.depth = config.depth;
    guarded("evaluate", [&] {
      for (const auto& [name, path] : result.runs) {
        report.systems.push_back(
            evaluate_run(name, read_run(path), *qrels, config.depth, config.relevance_threshold));
      }
      return 0;
    });
    Manifest m;
    for (const auto& [name, path] : result.runs) m.inputs[name] = content_hash(path);
    add_input(m, "qrels", config.qrels);
    m.flags["depth"] = num(static_cast<std::uint64_t>(config.depth));
    m.flags["threshold"] = num(static_cast<std::uint64_t>(config.relevance_threshold));
    stages.run("evaluate", out / "report.txt", m, [&](const std::filesystem::path& p) {
      std::ofstream f(p);
      f << report.render_table();
    });
    stages.run("evaluate", out / "report.jsonl", m, [&](const std::filesystem::path& p) {
      std::ofstream f(p);
      f << report.render_jsonl();
    });
    result.report = std::move(report);
    result.evaluated = true;
    result.report_path = out / "report.txt";
  }
  return result;
}

}  // namespace cqr
