#pragma once

// Independent reference evaluator for tests. Works on plain strings, sums
// over token occurrences instead of distinct terms, multiplies probabilities
// and takes one log at the end. Shares no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Words = std::vector<std::string>;

struct QA {
  Words q;
  Words a;
};

inline double p_ml(const std::string& w, const Words& doc) {
  double c = 0;
  for (const auto& t : doc) c += (t == w);
  return c / static_cast<double>(doc.size());
}

inline double collection_total(const std::vector<QA>& pairs) {
  double n = 0;
  for (const auto& p : pairs) n += static_cast<double>(p.q.size() + p.a.size());
  return n;
}

inline double p_c(const std::string& w, const std::vector<QA>& pairs) {
  double c = 0;
  for (const auto& p : pairs) {
    for (const auto& t : p.q) c += (t == w);
    for (const auto& t : p.a) c += (t == w);
  }
  const double n = collection_total(pairs);
  return c > 0 ? c / n : 1.0 / (10.0 * n);
}

// table[t][w] = P_tr(w | t)
using Table = std::map<std::string, std::map<std::string, double>>;

inline double p_tr(const Table& table, const std::string& w, const std::string& t) {
  auto row = table.find(t);
  if (row == table.end()) return 0.0;
  auto cell = row->second.find(w);
  return cell == row->second.end() ? 0.0 : cell->second;
}

// Topic model given by raw counts: phi(w|z) = (n_zw + beta) / (n_z + V beta).
struct Topics {
  std::size_t k = 0;
  double beta = 0.01;
  Words vocab;
  std::map<std::string, std::vector<double>> counts;  // counts[w][z]

  double n_z(std::size_t z) const {
    double s = 0;
    for (const auto& [w, c] : counts) s += c[z];
    return s;
  }
  double phi(const std::string& w, std::size_t z) const {
    const double v = static_cast<double>(vocab.size());
    auto it = counts.find(w);
    const double n = it == counts.end() ? 0.0 : it->second[z];
    return (n + beta) / (n_z(z) + v * beta);
  }
};

using Mu = std::array<double, 4>;

// W(w) = H(w) / sum over distinct query terms t of H(t)
inline std::map<std::string, double> weights(const Topics& m, const std::vector<double>& theta,
                                             const Words& query) {
  auto h = [&](const std::string& w) {
    double s = 0;
    for (std::size_t z = 0; z < m.k; ++z) s -= theta[z] * m.phi(w, z) * std::log(m.phi(w, z));
    return s;
  };
  std::set<std::string> distinct(query.begin(), query.end());
  double denom = 0;
  for (const auto& t : distinct) denom += h(t);
  std::map<std::string, double> out;
  for (const auto& t : distinct) out[t] = h(t) / denom;
  return out;
}

inline double lambda(const Words& doc) { return 1.0 / (static_cast<double>(doc.size()) + 1.0); }

inline double translation_part(const std::string& w, const Words& q, const Table& table) {
  double s = 0;
  for (const auto& t : q) s += p_tr(table, w, t) / static_cast<double>(q.size());
  return s;
}

inline double topic_part(const std::string& w, const Words& q, const Topics& m,
                         const std::vector<double>& theta) {
  double s = 0;
  for (const auto& t : q) {
    double assoc = 0;
    for (std::size_t z = 0; z < m.k; ++z) assoc += theta[z] * m.phi(w, z) * m.phi(t, z);
    s += assoc / static_cast<double>(q.size());
  }
  return s;
}

inline double lm(const Words& query, const Words& q, const std::vector<QA>& coll) {
  const double l = lambda(q);
  double prod = 1.0;
  for (const auto& w : query) prod *= (1 - l) * p_ml(w, q) + l * p_c(w, coll);
  return std::log(prod);
}

inline double tlm(const Words& query, const Words& q, const Table& table, const std::vector<QA>& coll) {
  const double l = lambda(q);
  double prod = 1.0;
  for (const auto& w : query) prod *= (1 - l) * translation_part(w, q, table) + l * p_c(w, coll);
  return std::log(prod);
}

inline double t2lm_plus(const Words& query, const QA& qa, const Mu& mu, const Table& table, const Topics& m,
                        const std::vector<double>& theta, const std::map<std::string, double>& weight,
                        const std::vector<QA>& coll) {
  const double l = lambda(qa.q);
  double prod = 1.0;
  for (const auto& w : query) {
    auto it = weight.find(w);
    const double wt = it == weight.end() ? 1.0 : it->second;
    const double ans = qa.a.empty() ? 0.0 : p_ml(w, qa.a);
    const double mix = mu[0] * wt * p_ml(w, qa.q) + mu[1] * translation_part(w, qa.q, table) +
                       mu[2] * topic_part(w, qa.q, m, theta) + mu[3] * wt * ans;
    prod *= (1 - l) * mix + l * p_c(w, coll);
  }
  return std::log(prod);
}

inline double t2lm(const Words& query, const QA& qa, const Mu& mu, const Table& table, const Topics& m,
                   const std::vector<QA>& coll) {
  return t2lm_plus(query, qa, mu, table, m, std::vector<double>(m.k, 1.0), {}, coll);
}

struct Features {
  double f1, f2, f3, f4;
};

inline Features features(const Words& query, const QA& qa, const Table& table, const Topics& m,
                         const std::vector<double>& theta, const std::map<std::string, double>& weight,
                         const std::vector<QA>& coll) {
  const double lq = lambda(qa.q);
  const double la = qa.a.empty() ? 1.0 : lambda(qa.a);
  double p1 = 1, p2 = 1, p3 = 1, p4 = 1;
  for (const auto& w : query) {
    const double wt = weight.at(w);
    const double bg = p_c(w, coll);
    p1 *= (1 - lq) * wt * p_ml(w, qa.q) + lq * bg;
    p2 *= (1 - lq) * translation_part(w, qa.q, table) + lq * bg;
    p3 *= (1 - lq) * topic_part(w, qa.q, m, theta) + lq * bg;
    p4 *= (1 - la) * wt * (qa.a.empty() ? 0.0 : p_ml(w, qa.a)) + la * bg;
  }
  return {std::log(p1), std::log(p2), std::log(p3), std::log(p4)};
}

// Okapi BM25 over token lists; docs are the indexed texts.
inline double bm25(const Words& query, std::size_t d, const std::vector<Words>& docs, double k1, double b) {
  const double n = static_cast<double>(docs.size());
  double total = 0;
  for (const auto& doc : docs) total += static_cast<double>(doc.size());
  const double avgdl = total / n;
  double s = 0;
  for (const auto& w : query) {
    double df = 0;
    for (const auto& doc : docs) df += std::count(doc.begin(), doc.end(), w) > 0;
    const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), w));
    if (tf == 0) continue;
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    const double dl = static_cast<double>(docs[d].size());
    s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl));
  }
  return s;
}

inline double vsm(const Words& query, std::size_t d, const std::vector<Words>& docs) {
  const double n = static_cast<double>(docs.size());
  std::set<std::string> terms(query.begin(), query.end());
  terms.insert(docs[d].begin(), docs[d].end());
  double dot = 0, nq = 0, nd = 0;
  for (const auto& w : terms) {
    double df = 0;
    for (const auto& doc : docs) df += std::count(doc.begin(), doc.end(), w) > 0;
    if (df == 0) continue;
    const double idf = std::log(n / df);
    const double qv = static_cast<double>(std::count(query.begin(), query.end(), w)) * idf;
    const double dv = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), w)) * idf;
    dot += qv * dv;
    nq += qv * qv;
    nd += dv * dv;
  }
  if (nq == 0 || nd == 0) return 0.0;
  return dot / std::sqrt(nq * nd);
}

struct Pair {
  Words source;
  Words target;
};

// ln sum over every alignment a of prod_j P(target_j | source_{a_j}), summed
// over pairs. Exponential in target length; fine for toy corpora.
inline double ibm1_log_likelihood(const Table& table, const std::vector<Pair>& pairs) {
  double ll = 0;
  for (const auto& p : pairs) {
    const std::size_t m = p.target.size();
    const std::size_t l = p.source.size();
    std::vector<std::size_t> a(m, 0);
    double total = 0;
    while (true) {
      double prod = 1;
      for (std::size_t j = 0; j < m; ++j) prod *= p_tr(table, p.target[j], p.source[a[j]]);
      total += prod;
      std::size_t j = 0;
      while (j < m && ++a[j] == l) a[j++] = 0;
      if (j == m) break;
    }
    ll += std::log(total);
  }
  return ll;
}

// Textbook Model 1 EM without a null word; uniform start over co-occurring targets.
inline Table ibm1_em(const std::vector<Pair>& pairs, int iterations) {
  Table t;
  std::map<std::string, std::set<std::string>> cooc;
  for (const auto& p : pairs)
    for (const auto& s : p.source) cooc[s].insert(p.target.begin(), p.target.end());
  for (const auto& [s, ws] : cooc)
    for (const auto& w : ws) t[s][w] = 1.0 / static_cast<double>(ws.size());
  for (int it = 0; it < iterations; ++it) {
    Table count;
    for (const auto& p : pairs) {
      for (const auto& w : p.target) {
        double z = 0;
        for (const auto& s : p.source) z += t[s][w];
        for (const auto& s : p.source) count[s][w] += t[s][w] / z;
      }
    }
    for (auto& [s, row] : count) {
      double total = 0;
      for (const auto& [w, c] : row) total += c;
      for (auto& [w, c] : row) t[s][w] = c / total;
    }
  }
  return t;
}

inline double dcg(const std::vector<int>& grades_in_rank_order, std::size_t k) {
  double s = 0;
  for (std::size_t r = 0; r < std::min(k, grades_in_rank_order.size()); ++r) {
    s += (std::pow(2.0, grades_in_rank_order[r]) - 1) / std::log2(static_cast<double>(r) + 2.0);
  }
  return s;
}

inline double ndcg_of_order(const std::vector<int>& grades, std::size_t k) {
  std::vector<int> ideal = grades;
  std::sort(ideal.rbegin(), ideal.rend());
  const double i = dcg(ideal, k);
  return i > 0 ? dcg(grades, k) / i : 0.0;
}

// Lambdas by recomputing NDCG@k of the whole list with each pair swapped.
inline std::vector<double> lambdas(const std::vector<double>& scores, const std::vector<int>& labels,
                                   std::size_t k) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return scores[x] > scores[y]; });
  std::vector<int> ranked;
  for (auto d : order) ranked.push_back(labels[d]);
  const double base = ndcg_of_order(ranked, k);
  std::vector<std::size_t> pos(n);
  for (std::size_t r = 0; r < n; ++r) pos[order[r]] = r;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[i] <= labels[j]) continue;
      std::vector<int> swapped = ranked;
      std::swap(swapped[pos[i]], swapped[pos[j]]);
      const double delta = std::abs(ndcg_of_order(swapped, k) - base);
      const double rho = 1.0 / (1.0 + std::exp(scores[i] - scores[j]));
      out[i] += delta * rho;
      out[j] -= delta * rho;
    }
  }
  return out;
}

// AP@k with relevance = grade >= 1, denominator min(R, k).
inline double average_precision(const std::vector<int>& grades_in_rank_order, std::size_t relevant_total,
                                std::size_t k) {
  double hits = 0, sum = 0;
  for (std::size_t r = 0; r < std::min(k, grades_in_rank_order.size()); ++r) {
    if (grades_in_rank_order[r] >= 1) {
      hits += 1;
      sum += hits / static_cast<double>(r + 1);
    }
  }
  const double denom = static_cast<double>(std::min(relevant_total, k));
  return denom > 0 ? sum / denom : 0.0;
}

}  // namespace oracle
