// cqr: command-line front end for ingest, indexing, model training, feature
// extraction, ranking, evaluation and the end-to-end experiment.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "cqr/corpus.hpp"
#include "cqr/eval.hpp"
#include "cqr/index.hpp"
#include "cqr/ltr.hpp"
#include "cqr/manifest.hpp"
#include "cqr/pipeline.hpp"
#include "cqr/relevance.hpp"
#include "cqr/simd.hpp"
#include "cqr/synth.hpp"
#include "cqr/topics.hpp"
#include "cqr/translation.hpp"

namespace fs = std::filesystem;
using namespace cqr;

namespace {

// Options that name where results go, not what they are made from.
const std::set<std::string> kOutputOptions{"--out", "--output", "--config", "--help", "--simd"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Reads key=value lines ('#' comments) and turns them into --key=value
// arguments placed before the real ones, skipping keys the user passed.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string config;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const auto eq = a.find('=');
    const std::string key = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(key);
    if (key == "config") {
      if (eq != std::string::npos) {
        config = a.substr(eq + 1);
      } else if (i + 1 < args.size()) {
        config = args[i + 1];
      }
    }
  }
  if (config.empty() || args.empty()) return args;
  std::ifstream in(config);
  if (!in) throw std::runtime_error("cannot open config file: " + config);
  std::vector<std::string> extra;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(config + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!given.contains(key)) extra.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  // args[0] is the subcommand; config options belong to it.
  std::vector<std::string> out{args.front()};
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

// Recipe for a subcommand artifact: every option value, with existing input
// files recorded by content hash.
Manifest recipe_of(const CLI::App& sub, std::uint64_t seed) {
  Manifest m;
  m.stage = sub.get_name();
  m.seed = seed;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (name.empty() || kOutputOptions.contains(name)) continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    std::error_code ec;
    if (!value.empty() && opt->count() > 0 && fs::is_regular_file(value, ec)) {
      m.inputs[name] = content_hash(value);
    } else {
      m.flags[name] = value;
    }
  }
  return m;
}

void build(const CLI::App& sub, std::uint64_t seed, const fs::path& artifact,
           const std::function<void(const fs::path&)>& produce) {
  if (build_artifact(recipe_of(sub, seed), artifact, produce)) {
    std::cerr << "wrote " << artifact.string() << '\n';
  } else {
    std::cerr << "up to date: " << artifact.string() << '\n';
  }
}

struct Args {
  PipelineConfig cfg;
  std::string tokenize = "whitespace";
  std::string field = "question_and_answer";
  std::string direction = "pooled_both";
  std::string method = "t2lm+";
  std::string simd = "auto";
  double alpha = 0.0;
  fs::path output;
  fs::path tm_path;
  fs::path lda_path;
  fs::path train_path;
  fs::path features_path;
  std::vector<std::string> runs;
  SynthOptions synth;
};

void add_corpus(CLI::App* sub, Args& a) {
  sub->add_option("--corpus", a.cfg.corpus, "Q&A pairs JSONL")->required()->check(CLI::ExistingFile);
  sub->add_option("--users", a.cfg.users, "users JSONL with best-answer counts")->check(CLI::ExistingFile);
  sub->add_option("--stopwords", a.cfg.stopwords, "one stopword per line")->check(CLI::ExistingFile);
  sub->add_option("--tokenize", a.tokenize, "whitespace | pretokenized");
}

void add_index(CLI::App* sub, Args& a) {
  sub->add_option("--field", a.field, "question | question_and_answer");
  sub->add_option("--k1", a.cfg.features.bm25.k1, "BM25 k1");
  sub->add_option("--b", a.cfg.features.bm25.b, "BM25 b");
  sub->add_option("--top-k", a.cfg.features.top_k, "candidates per query");
}

void add_tm(CLI::App* sub, Args& a) {
  sub->add_option("--em-iters", a.cfg.em_iterations, "EM iterations");
  sub->add_option("--direction", a.direction, "q_to_a | a_to_q | pooled_both");
  sub->add_option("--prune", a.cfg.prune, "drop translation entries below this");
}

void add_lda(CLI::App* sub, Args& a) {
  sub->add_option("--topics", a.cfg.lda.topics, "number of topics K");
  sub->add_option("--alpha", a.alpha, "document-topic prior (default 50/K)");
  sub->add_option("--beta", a.cfg.lda.beta, "topic-word prior");
  sub->add_option("--gibbs-iters", a.cfg.lda.iterations, "Gibbs sweeps");
}

void add_seed(CLI::App* sub, Args& a) { sub->add_option("--seed", a.cfg.seed, "random seed"); }

void add_relevance(CLI::App* sub, Args& a) {
  sub->add_option("--mu1", a.cfg.relevance.mu.mu1, "weight of exact question match");
  sub->add_option("--mu2", a.cfg.relevance.mu.mu2, "weight of translation");
  sub->add_option("--mu3", a.cfg.relevance.mu.mu3, "weight of topic association");
  sub->add_option("--mu4", a.cfg.relevance.mu.mu4, "weight of exact answer match");
  sub->add_flag("--rescale-weights", a.cfg.relevance.rescale_weights, "term weights average one, not sum to one");
}

void add_features(CLI::App* sub, Args& a) {
  sub->add_flag("--combine-quality", a.cfg.features.combine_quality, "one mean authority column");
  sub->add_flag("--pad-candidates", a.cfg.features.pad_candidates, "pad short candidate lists with random pairs");
}

void add_ltr(CLI::App* sub, Args& a) {
  sub->add_option("--trees", a.cfg.ltr.trees, "boosting rounds");
  sub->add_option("--leaves", a.cfg.ltr.leaves, "leaves per tree");
  sub->add_option("--learning-rate", a.cfg.ltr.learning_rate, "shrinkage");
  sub->add_option("--min-leaf", a.cfg.ltr.min_leaf, "minimum instances per leaf");
  sub->add_option("--ndcg-cutoff", a.cfg.ltr.ndcg_cutoff, "NDCG truncation for lambdas");
}

void add_depth(CLI::App* sub, Args& a) {
  sub->add_option("--depth", a.cfg.depth, "metric cutoff k");
  sub->add_option("--threshold", a.cfg.relevance_threshold, "minimum grade counted relevant by AP");
}

// Turns the string-valued flags into typed config.
void finalize(Args& a) {
  a.cfg.tokenize = a.tokenize == "pretokenized" ? TokenizeMode::pretokenized : TokenizeMode::whitespace;
  if (a.tokenize != "pretokenized" && a.tokenize != "whitespace") {
    throw std::invalid_argument("unknown tokenize mode: " + a.tokenize);
  }
  a.cfg.field = parse_index_field(a.field);
  a.cfg.direction = parse_direction(a.direction);
  if (a.alpha > 0.0) a.cfg.lda.alpha = a.alpha;
  a.cfg.lda.seed = a.cfg.seed;
  a.cfg.relevance.fold_in.seed = a.cfg.seed;
  a.cfg.relevance.bm25 = a.cfg.features.bm25;
  a.cfg.features.seed = a.cfg.seed;
  a.cfg.relevance.mu.validate();
  a.cfg.ltr.validate();
  if (a.simd != "auto") simd::force_isa(simd::parse_isa(a.simd));
}

IngestOptions ingest_options(const Args& a) {
  IngestOptions o;
  o.mode = a.cfg.tokenize;
  if (a.cfg.stopwords) o.stopwords = read_stopwords(*a.cfg.stopwords);
  return o;
}

fs::path or_default(const fs::path& p, const fs::path& fallback) { return p.empty() ? fallback : p; }

std::string run_file_name(const std::string& method) {
  std::string s;
  for (char c : method) s += c == '+' ? std::string("_plus") : std::string(1, c);
  return s + ".run";
}

}  // namespace

int main(int argc, char** argv) {
  Args a;
  const char* env_out = std::getenv("CQR_OUTPUT_DIR");
  a.cfg.out_dir = env_out && *env_out ? env_out : "cqr-out";

  CLI::App app{"Community question retrieval: translation and topic language models fused with LambdaMART"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", a.cfg.out_dir, "output directory (default $CQR_OUTPUT_DIR or ./cqr-out)");
    sub->add_option("--config", "key=value file; command-line flags win");
    sub->add_option("--simd", a.simd, "auto | scalar | avx2");
  };

  auto* ingest = app.add_subcommand("ingest", "tokenize the corpus and write its vocabulary");
  common(ingest);
  add_corpus(ingest, a);

  auto* index = app.add_subcommand("build-index", "build the inverted index");
  common(index);
  add_corpus(index, a);
  add_index(index, a);

  auto* tm = app.add_subcommand("train-tm", "train the IBM Model 1 translation table");
  common(tm);
  add_corpus(tm, a);
  add_tm(tm, a);
  add_seed(tm, a);
  tm->add_option("--output", a.output, "table path (default <out>/translation.txt)");

  auto* lda = app.add_subcommand("train-lda", "train the LDA topic model");
  common(lda);
  add_corpus(lda, a);
  add_lda(lda, a);
  add_seed(lda, a);
  lda->add_option("--output", a.output, "model path (default <out>/lda.txt)");

  auto model_inputs = [&](CLI::App* sub) {
    sub->add_option("--tm", a.tm_path, "translation table (default <out>/translation.txt)");
    sub->add_option("--lda", a.lda_path, "topic model (default <out>/lda.txt)");
  };

  auto* features = app.add_subcommand("features", "extract F1-F4 and quality features per candidate");
  common(features);
  add_corpus(features, a);
  add_index(features, a);
  add_relevance(features, a);
  add_features(features, a);
  add_seed(features, a);
  model_inputs(features);
  features->add_option("--queries", a.cfg.queries, "queries JSONL")->required()->check(CLI::ExistingFile);
  features->add_option("--qrels", a.cfg.qrels, "graded judgments for labels")->check(CLI::ExistingFile);
  features->add_option("--output", a.output, "LETOR path (default <out>/features.letor)");

  auto* train = app.add_subcommand("train-ranker", "train LambdaMART on LETOR features");
  common(train);
  add_ltr(train, a);
  add_seed(train, a);
  train->add_option("--train", a.train_path, "training LETOR file")->required()->check(CLI::ExistingFile);
  train->add_option("--output", a.output, "model path (default <out>/ranker.txt)");

  auto* rank = app.add_subcommand("rank", "rank candidates with a relevance method or a trained ranker");
  common(rank);
  rank->add_option("--corpus", a.cfg.corpus, "Q&A pairs JSONL")->check(CLI::ExistingFile);
  rank->add_option("--users", a.cfg.users, "users JSONL")->check(CLI::ExistingFile);
  rank->add_option("--stopwords", a.cfg.stopwords, "one stopword per line")->check(CLI::ExistingFile);
  rank->add_option("--tokenize", a.tokenize, "whitespace | pretokenized");
  add_index(rank, a);
  add_relevance(rank, a);
  add_seed(rank, a);
  model_inputs(rank);
  rank->add_option("--queries", a.cfg.queries, "queries JSONL")->check(CLI::ExistingFile);
  rank->add_option("--method", a.method, "vsm | bm25 | lm | tlm | t2lm | t2lm+");
  rank->add_option("--ranker", a.cfg.ranker, "LambdaMART model; ranks --features instead")->check(CLI::ExistingFile);
  rank->add_option("--features", a.features_path, "LETOR file to rank with --ranker")->check(CLI::ExistingFile);
  rank->add_option("--output", a.output, "run path (default <out>/<method>.run)");

  auto* evaluate = app.add_subcommand("evaluate", "MAP@k and NDCG@k of run files");
  common(evaluate);
  evaluate->add_option("--run", a.runs, "run file, optionally NAME=PATH; repeatable")->required();
  evaluate->add_option("--qrels", a.cfg.qrels, "graded judgments")->required()->check(CLI::ExistingFile);
  add_depth(evaluate, a);
  evaluate->add_option("--output", a.output, "report path (default <out>/report.txt)");

  auto* pipeline = app.add_subcommand("pipeline", "run every stage end to end");
  common(pipeline);
  add_corpus(pipeline, a);
  add_index(pipeline, a);
  add_tm(pipeline, a);
  add_lda(pipeline, a);
  add_relevance(pipeline, a);
  add_features(pipeline, a);
  add_ltr(pipeline, a);
  add_depth(pipeline, a);
  add_seed(pipeline, a);
  pipeline->add_option("--queries", a.cfg.queries, "queries JSONL")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--qrels", a.cfg.qrels, "graded judgments")->check(CLI::ExistingFile);
  pipeline->add_option("--ranker", a.cfg.ranker, "apply this model instead of training")->check(CLI::ExistingFile);

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted relevance");
  common(synth);
  synth->add_option("--size", a.synth.size, "Q&A pairs");
  synth->add_option("--topics", a.synth.topics, "topics");
  synth->add_option("--queries", a.synth.queries, "queries (default size/10)");
  synth->add_option("--seed", a.synth.seed, "random seed");

  try {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    args = expand_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    finalize(a);
    const fs::path& out = a.cfg.out_dir;
    fs::create_directories(out);

    auto load_corpus = [&] { return ingest_corpus(a.cfg.corpus, a.cfg.users, ingest_options(a)); };

    if (*ingest) {
      const Corpus corpus = load_corpus();
      build(*ingest, 0, out / "vocab.txt", [&](const fs::path& p) {
        std::ofstream f(p);
        const auto& vocab = corpus.vocabulary();
        for (TermId t = 0; t < vocab.size(); ++t) {
          f << t << '\t' << vocab.token(t) << '\t' << corpus.stats().frequency(t) << '\n';
        }
      });
      std::cout << "pairs " << corpus.pairs().size() << "\nvocabulary " << corpus.vocabulary().size()
                << "\ntokens " << corpus.stats().total() << "\nusers " << corpus.users().size() << '\n';
    } else if (*index) {
      const Corpus corpus = load_corpus();
      const InvertedIndex idx = build_index(corpus, a.cfg.field);
      build(*index, 0, out / "index.txt", [&](const fs::path& p) { idx.save(p); });
    } else if (*tm) {
      const Corpus corpus = load_corpus();
      build(*tm, a.cfg.seed, or_default(a.output, out / "translation.txt"), [&](const fs::path& p) {
        Ibm1Options opt;
        opt.iterations = a.cfg.em_iterations;
        opt.prune_threshold = a.cfg.prune;
        opt.seed = a.cfg.seed;
        const auto pairs = make_parallel_pairs(corpus, a.cfg.direction);
        opt.on_iteration = [&](int it, const TranslationTable& table) {
          std::cerr << "em " << it << " loglik " << corpus_log_likelihood(table, pairs) << '\n';
        };
        train_ibm1(pairs, opt).save(p);
      });
    } else if (*lda) {
      const Corpus corpus = load_corpus();
      build(*lda, a.cfg.seed, or_default(a.output, out / "lda.txt"), [&](const fs::path& p) {
        train_lda(topic_training_docs(corpus), corpus.vocabulary().size(), a.cfg.lda).save(p);
      });
    } else if (*features) {
      const Corpus corpus = load_corpus();
      const InvertedIndex idx = build_index(corpus, a.cfg.field);
      const auto table = TranslationTable::load(or_default(a.tm_path, out / "translation.txt"));
      const auto topics = TopicModel::load(or_default(a.lda_path, out / "lda.txt"));
      const auto queries = read_queries(a.cfg.queries, corpus, ingest_options(a));
      const std::optional<Qrels> qrels = a.cfg.qrels ? std::optional(read_qrels(*a.cfg.qrels)) : std::nullopt;
      const RelevanceModel relevance(corpus, idx, table, topics, a.cfg.relevance);
      build(*features, a.cfg.seed, or_default(a.output, out / "features.letor"), [&](const fs::path& p) {
        write_letor(extract_features(corpus, idx, relevance, queries, qrels ? &*qrels : nullptr, a.cfg.features),
                    p);
      });
    } else if (*train) {
      const RankingDataset data = read_letor(a.train_path);
      const fs::path target = or_default(a.output, out / "ranker.txt");
      build(*train, a.cfg.seed, target,
            [&](const fs::path& p) { train_lambdamart(data, a.cfg.ltr, a.cfg.seed).save(p); });
      const auto model = LambdaMARTModel::load(target);
      std::cout << "train ndcg@" << a.cfg.ltr.ndcg_cutoff << ' '
                << dataset_ndcg(model, data, a.cfg.ltr.ndcg_cutoff) << '\n';
    } else if (*rank) {
      if (a.cfg.ranker) {
        if (a.features_path.empty()) throw std::invalid_argument("--ranker needs --features");
        const auto model = LambdaMARTModel::load(*a.cfg.ranker);
        const auto data = read_letor(a.features_path);
        build(*rank, a.cfg.seed, or_default(a.output, out / "lambdamart.run"),
              [&](const fs::path& p) { write_run(rank_with_model(model, data), p); });
      } else {
        if (a.cfg.corpus.empty() || a.cfg.queries.empty()) {
          throw std::invalid_argument("--method ranking needs --corpus and --queries");
        }
        const Method method = parse_method(a.method);
        const Corpus corpus = load_corpus();
        const InvertedIndex idx = build_index(corpus, a.cfg.field);
        const bool needs_table = method == Method::tlm || method == Method::t2lm || method == Method::t2lm_plus;
        const bool needs_topics = method == Method::t2lm || method == Method::t2lm_plus;
        const TranslationTable table =
            needs_table ? TranslationTable::load(or_default(a.tm_path, out / "translation.txt")) : TranslationTable{};
        const TopicModel topics =
            needs_topics ? TopicModel::load(or_default(a.lda_path, out / "lda.txt")) : TopicModel{};
        const auto queries = read_queries(a.cfg.queries, corpus, ingest_options(a));
        const RelevanceModel relevance(corpus, idx, table, topics, a.cfg.relevance);
        build(*rank, a.cfg.seed, or_default(a.output, out / run_file_name(std::string(method_name(method)))),
              [&](const fs::path& p) {
                write_run(rank_with_method(method, corpus, idx, relevance, queries, a.cfg.features), p);
              });
      }
    } else if (*evaluate) {
      const Qrels qrels = read_qrels(*a.cfg.qrels);
      MetricReport report;
      report.depth = a.cfg.depth;
      for (const auto& run_arg : a.runs) {
        const auto eq = run_arg.find('=');
        const std::string name = eq == std::string::npos ? fs::path(run_arg).stem().string() : run_arg.substr(0, eq);
        const fs::path path = eq == std::string::npos ? fs::path(run_arg) : fs::path(run_arg.substr(eq + 1));
        report.systems.push_back(evaluate_run(name, read_run(path), qrels, a.cfg.depth, a.cfg.relevance_threshold));
      }
      const fs::path target = or_default(a.output, out / "report.txt");
      build(*evaluate, 0, target, [&](const fs::path& p) { std::ofstream(p) << report.render_table(); });
      fs::path jsonl = target;
      jsonl.replace_extension(".jsonl");
      build(*evaluate, 0, jsonl, [&](const fs::path& p) { std::ofstream(p) << report.render_jsonl(); });
      std::cout << report.render_table();
    } else if (*pipeline) {
      const PipelineResult result = run_pipeline(a.cfg, &std::cerr);
      if (result.evaluated) std::cout << result.report.render_table();
      std::cerr << "stages run " << result.stages_run << ", skipped " << result.stages_skipped << '\n';
    } else if (*synth) {
      const SynthData data = generate_synthetic(a.synth);
      const SynthFiles files = write_synthetic(data, out);
      std::cout << files.corpus.string() << '\n'
                << files.users.string() << '\n'
                << files.queries.string() << '\n'
                << files.qrels.string() << '\n';
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
