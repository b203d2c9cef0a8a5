#include "cqr/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace cqr {

std::string content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing file: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

bool Manifest::same_recipe(const Manifest& other) const {
  return stage == other.stage && inputs == other.inputs && flags == other.flags && seed == other.seed;
}

std::filesystem::path manifest_path(const std::filesystem::path& artifact) {
  return std::filesystem::path(artifact.string() + ".manifest.json");
}

void write_manifest(const Manifest& m, const std::filesystem::path& artifact) {
  nlohmann::json j{{"stage", m.stage},  {"inputs", m.inputs},          {"flags", m.flags},
                   {"seed", m.seed},    {"output", artifact.filename().string()},
                   {"output_hash", m.output_hash}};
  AtomicOutput out(manifest_path(artifact));
  {
    std::ofstream f(out.temp());
    f << j.dump(2) << '\n';
    if (!f) throw std::runtime_error("cannot write manifest for " + artifact.string());
  }
  out.commit();
}

bool read_manifest(const std::filesystem::path& artifact, Manifest& out) {
  std::ifstream in(manifest_path(artifact));
  if (!in) return false;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    out.stage = j.at("stage").get<std::string>();
    out.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    out.flags = j.at("flags").get<std::map<std::string, std::string>>();
    out.seed = j.at("seed").get<std::uint64_t>();
    out.output_hash = j.at("output_hash").get<std::string>();
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

bool manifest_up_to_date(const Manifest& expected, const std::filesystem::path& artifact) {
  if (!std::filesystem::exists(artifact)) return false;
  Manifest recorded;
  if (!read_manifest(artifact, recorded)) return false;
  return recorded.same_recipe(expected) && recorded.output_hash == content_hash(artifact);
}

bool build_artifact(const Manifest& recipe, const std::filesystem::path& artifact,
                    const std::function<void(const std::filesystem::path&)>& produce) {
  if (manifest_up_to_date(recipe, artifact)) return false;
  std::error_code ec;
  std::filesystem::remove(manifest_path(artifact), ec);
  AtomicOutput out(artifact);
  produce(out.temp());
  out.commit();
  Manifest m = recipe;
  m.output_hash = content_hash(artifact);
  write_manifest(m, artifact);
  return true;
}

AtomicOutput::AtomicOutput(std::filesystem::path target)
    : target_(std::move(target)), temp_(target_.string() + ".partial") {
  if (target_.has_parent_path()) std::filesystem::create_directories(target_.parent_path());
}

AtomicOutput::~AtomicOutput() {
  if (!committed_) {
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicOutput::commit() {
  std::filesystem::rename(temp_, target_);
  committed_ = true;
}

}  // namespace cqr
