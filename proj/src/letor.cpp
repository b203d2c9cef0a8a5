#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>

#include "cqr/corpus.hpp"
#include "cqr/ltr.hpp"

namespace cqr {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, const char* what) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string("bad ") + what + ": '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

RankingInstance parse_letor_line(std::string_view line) {
  RankingInstance inst;
  const auto hash = line.find('#');
  if (hash == std::string_view::npos) throw std::invalid_argument("missing '#<docid>' comment");
  inst.doc_id = std::string(trim(line.substr(hash + 1)));
  if (inst.doc_id.empty()) throw std::invalid_argument("empty doc id");
  const auto fields = split_fields(line.substr(0, hash));
  if (fields.size() < 2) throw std::invalid_argument("expected '<label> qid:<qid> ...'");
  inst.label = parse_number<int>(fields[0], "label");
  if (inst.label < 0 || inst.label > 2) throw std::invalid_argument("label must be 0, 1 or 2");
  if (fields[1].substr(0, 4) != "qid:" || fields[1].size() == 4) {
    throw std::invalid_argument("expected qid:<qid>");
  }
  inst.query_id = std::string(fields[1].substr(4));
  for (std::size_t i = 2; i < fields.size(); ++i) {
    const auto colon = fields[i].find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("expected <index>:<value>");
    const auto index = parse_number<std::size_t>(fields[i].substr(0, colon), "feature index");
    if (index != inst.features.size() + 1) {
      throw std::invalid_argument("feature index " + std::to_string(index) + " where " +
                                  std::to_string(inst.features.size() + 1) + " was expected");
    }
    inst.features.push_back(parse_number<double>(fields[i].substr(colon + 1), "feature value"));
  }
  return inst;
}

std::string format_letor_line(const RankingInstance& inst) {
  std::string out = std::to_string(inst.label) + " qid:" + inst.query_id;
  char buf[64];
  for (std::size_t i = 0; i < inst.features.size(); ++i) {
    auto res = std::to_chars(buf, buf + sizeof(buf), inst.features[i]);
    out += ' ' + std::to_string(i + 1) + ':' + std::string(buf, res.ptr);
  }
  out += " #" + inst.doc_id;
  return out;
}

RankingDataset read_letor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open LETOR file: " + path.string());
  RankingDataset data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      data.push_back(parse_letor_line(line));
      if (data.back().features.size() != data.front().features.size()) {
        throw std::invalid_argument("feature count differs from the first instance");
      }
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

void write_letor(const RankingDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write LETOR file: " + path.string());
  for (const auto& inst : data) out << format_letor_line(inst) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace cqr
