#pragma once

// Seeded generator of a topic-structured Q&A archive with planted relevance.
//
// Each topic owns a set of concepts, and every concept has two interchangeable
// surface forms ("...a" / "...b"). Questions render each concept in one form;
// answers mostly use the other, which is what lets a translation model learn
// the paraphrase links. Every query gets:
//   - a duplicate question answered by a high-authority user (grade 2),
//   - a duplicate question answered by a low-authority user (grade 1),
//   - related questions sharing two of its three concepts (grade 1).
// Remaining pairs are background drawn from random intents.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cqr/eval.hpp"

namespace cqr {

struct SynthOptions {
  std::size_t size = 1000;     // Q&A pairs
  std::size_t topics = 6;
  std::size_t queries = 0;     // 0: size / 10
  std::size_t concepts_per_topic = 12;
  std::size_t related_per_query = 2;
  std::uint64_t seed = 1;
};

struct SynthPair {
  std::string id;
  std::vector<std::string> question;
  std::vector<std::string> answer;
  std::string asker;
  std::string answerer;
};

struct SynthQuery {
  std::string id;
  std::vector<std::string> tokens;
};

struct SynthUser {
  std::string id;
  std::uint64_t best_answers = 0;
};

struct SynthData {
  std::vector<SynthPair> pairs;
  std::vector<SynthQuery> queries;
  std::vector<SynthUser> users;
  Qrels qrels;
  std::size_t topics = 0;
};

// Throws std::invalid_argument unless size >= 10 and topics >= 2.
SynthData generate_synthetic(const SynthOptions& options);

// Surface-form tokens of a topic, used to check vocabulary partitions.
std::vector<std::string> topic_vocabulary(std::size_t topic, const SynthOptions& options);

struct SynthFiles {
  std::filesystem::path corpus;   // corpus.jsonl
  std::filesystem::path users;    // users.jsonl
  std::filesystem::path queries;  // queries.jsonl
  std::filesystem::path qrels;    // qrels.txt
};

SynthFiles write_synthetic(const SynthData& data, const std::filesystem::path& out_dir);

}  // namespace cqr
