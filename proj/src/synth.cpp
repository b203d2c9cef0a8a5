#include "cqr/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <random>
#include <stdexcept>

#include "cqr/topics.hpp"

namespace cqr {
namespace {

constexpr std::size_t kGenericPerTopic = 6;
constexpr std::size_t kFunctionWords = 12;

struct Intent {
  std::size_t topic;
  std::vector<std::size_t> concepts;
};

class Generator {
 public:
  explicit Generator(const SynthOptions& o) : opt_(o), rng_(o.seed) {}

  std::size_t pick(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(n));
    return std::min(i, n - 1);
  }
  bool coin(double p) { return uniform01(rng_) < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[pick(i)]);
  }

  std::vector<std::size_t> distinct_concepts(std::size_t count, const std::vector<std::size_t>& avoid = {}) {
    std::vector<std::size_t> pool;
    for (std::size_t c = 0; c < opt_.concepts_per_topic; ++c) {
      if (std::find(avoid.begin(), avoid.end(), c) == avoid.end()) pool.push_back(c);
    }
    shuffle(pool);
    pool.resize(std::min(count, pool.size()));
    return pool;
  }

  Intent random_intent() { return {pick(opt_.topics), distinct_concepts(3)}; }

  static std::string concept_word(std::size_t topic, std::size_t c, bool form_b) {
    return "t" + std::to_string(topic) + "c" + std::to_string(c) + (form_b ? "b" : "a");
  }
  static std::string generic_word(std::size_t topic, std::size_t g) {
    return "t" + std::to_string(topic) + "g" + std::to_string(g);
  }
  static std::string function_word(std::size_t f) { return "fw" + std::to_string(f); }

  // Returns the rendered question; `forms` receives the form chosen per concept.
  std::vector<std::string> render_question(const Intent& in, std::vector<bool>& forms) {
    std::vector<std::string> words;
    forms.clear();
    for (std::size_t c : in.concepts) {
      const bool b = coin(0.5);
      forms.push_back(b);
      words.push_back(concept_word(in.topic, c, b));
    }
    words.push_back(generic_word(in.topic, pick(kGenericPerTopic)));
    words.push_back(function_word(pick(kFunctionWords)));
    if (coin(0.5)) words.push_back(function_word(pick(kFunctionWords)));
    shuffle(words);
    return words;
  }

  std::vector<std::string> render_answer(const Intent& in, const std::vector<bool>& forms) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < in.concepts.size(); ++i) {
      words.push_back(concept_word(in.topic, in.concepts[i], !forms[i]));
      if (coin(0.3)) words.push_back(concept_word(in.topic, in.concepts[i], forms[i]));
    }
    for (int g = 0; g < 2; ++g) words.push_back(generic_word(in.topic, pick(kGenericPerTopic)));
    for (int f = 0; f < 2; ++f) words.push_back(function_word(pick(kFunctionWords)));
    shuffle(words);
    return words;
  }

  SynthPair make_pair(const Intent& in, const std::string& asker, const std::string& answerer) {
    std::vector<bool> forms;
    SynthPair p;
    p.question = render_question(in, forms);
    p.answer = render_answer(in, forms);
    p.asker = asker;
    p.answerer = answerer;
    return p;
  }

 private:
  const SynthOptions& opt_;
  std::mt19937_64 rng_;
};

std::string numbered(char prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

std::vector<std::string> topic_vocabulary(std::size_t topic, const SynthOptions& options) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < options.concepts_per_topic; ++c) {
    out.push_back("t" + std::to_string(topic) + "c" + std::to_string(c) + "a");
    out.push_back("t" + std::to_string(topic) + "c" + std::to_string(c) + "b");
  }
  for (std::size_t g = 0; g < kGenericPerTopic; ++g) {
    out.push_back("t" + std::to_string(topic) + "g" + std::to_string(g));
  }
  return out;
}

SynthData generate_synthetic(const SynthOptions& options) {
  if (options.size < 10) throw std::invalid_argument("synthetic corpus size must be at least 10");
  if (options.topics < 2) throw std::invalid_argument("synthetic corpus needs at least 2 topics");
  if (options.concepts_per_topic < 4) throw std::invalid_argument("need at least 4 concepts per topic");
  const std::size_t per_query = 2 + options.related_per_query;
  std::size_t n_queries = options.queries != 0 ? options.queries : std::max<std::size_t>(2, options.size / 10);
  n_queries = std::min(n_queries, options.size / per_query);
  if (n_queries == 0) throw std::invalid_argument("corpus too small for any planted query");

  Generator gen(options);
  SynthData data;
  data.topics = options.topics;

  const std::size_t n_users = std::max<std::size_t>(10, options.size / 5);
  std::vector<std::string> experts;
  std::vector<std::string> novices;
  for (std::size_t u = 0; u < n_users; ++u) {
    SynthUser user{numbered('u', u, 4), 0};
    if (u % 4 == 0) {
      user.best_answers = 100 + gen.pick(801);
      experts.push_back(user.id);
    } else {
      user.best_answers = gen.pick(5);
      novices.push_back(user.id);
    }
    data.users.push_back(user);
  }
  auto any_user = [&] { return data.users[gen.pick(data.users.size())].id; };

  struct Planted {
    SynthPair pair;
    std::size_t query;
    int grade;
  };
  std::vector<Planted> planted;
  for (std::size_t q = 0; q < n_queries; ++q) {
    const Intent intent = gen.random_intent();
    std::vector<bool> forms;
    data.queries.push_back({numbered('q', q, 4), gen.render_question(intent, forms)});
    planted.push_back({gen.make_pair(intent, any_user(), experts[gen.pick(experts.size())]), q, 2});
    planted.push_back({gen.make_pair(intent, any_user(), novices[gen.pick(novices.size())]), q, 1});
    for (std::size_t r = 0; r < options.related_per_query; ++r) {
      Intent related = intent;
      related.concepts.pop_back();
      related.concepts.push_back(gen.distinct_concepts(1, intent.concepts).front());
      planted.push_back({gen.make_pair(related, any_user(), any_user()), q, 1});
    }
  }

  std::vector<std::pair<SynthPair, long>> all;
  for (auto& p : planted) all.emplace_back(std::move(p.pair), static_cast<long>(all.size()));
  while (all.size() < options.size) {
    all.emplace_back(gen.make_pair(gen.random_intent(), any_user(), any_user()), -1);
  }
  gen.shuffle(all);
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].first.id = numbered('p', i, 5);
    if (all[i].second >= 0) {
      const Planted& src = planted[static_cast<std::size_t>(all[i].second)];
      data.qrels.add(data.queries[src.query].id, all[i].first.id, src.grade);
    }
    data.pairs.push_back(std::move(all[i].first));
  }
  return data;
}

SynthFiles write_synthetic(const SynthData& data, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  SynthFiles files{out_dir / "corpus.jsonl", out_dir / "users.jsonl", out_dir / "queries.jsonl",
                   out_dir / "qrels.txt"};
  auto join = [](const std::vector<std::string>& words) {
    std::string s;
    for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
    return s;
  };
  {
    std::ofstream out(files.corpus);
    for (const auto& p : data.pairs) {
      nlohmann::json j{{"id", p.id},         {"question", join(p.question)}, {"answer", join(p.answer)},
                       {"asker", p.asker},   {"answerer", p.answerer}};
      out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("cannot write " + files.corpus.string());
  }
  {
    std::ofstream out(files.users);
    for (const auto& u : data.users) {
      out << nlohmann::json{{"user", u.id}, {"best_answers", u.best_answers}}.dump() << '\n';
    }
    if (!out) throw std::runtime_error("cannot write " + files.users.string());
  }
  {
    std::ofstream out(files.queries);
    for (const auto& q : data.queries) {
      out << nlohmann::json{{"id", q.id}, {"query", join(q.tokens)}}.dump() << '\n';
    }
    if (!out) throw std::runtime_error("cannot write " + files.queries.string());
  }
  write_qrels(data.qrels, files.qrels);
  return files;
}

}  // namespace cqr
