#pragma once

// Per-artifact provenance manifests and crash-safe output files.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

namespace cqr {

// 64-bit FNV-1a over the file bytes, as 16 hex digits.
std::string content_hash(const std::filesystem::path& path);

struct Manifest {
  std::string stage;
  std::map<std::string, std::string> inputs;  // logical name -> content hash
  std::map<std::string, std::string> flags;
  std::uint64_t seed = 0;
  std::string output_hash;

  // Everything except output_hash.
  bool same_recipe(const Manifest& other) const;
};

std::filesystem::path manifest_path(const std::filesystem::path& artifact);
void write_manifest(const Manifest& manifest, const std::filesystem::path& artifact);
// Returns false for a missing or unreadable manifest.
bool read_manifest(const std::filesystem::path& artifact, Manifest& out);

// True when the artifact exists, its manifest has the same recipe, and the
// artifact still hashes to the recorded output hash.
bool manifest_up_to_date(const Manifest& expected, const std::filesystem::path& artifact);

// Calls produce(temp path) and commits the result with a fresh manifest,
// unless the artifact is already up to date. Returns true when it rebuilt.
// On failure the partial file and any stale manifest are removed.
bool build_artifact(const Manifest& recipe, const std::filesystem::path& artifact,
                    const std::function<void(const std::filesystem::path&)>& produce);

// Writes go to "<target>.partial"; commit() renames onto the target. The
// partial file is removed if the object dies uncommitted.
class AtomicOutput {
 public:
  explicit AtomicOutput(std::filesystem::path target);
  ~AtomicOutput();
  AtomicOutput(const AtomicOutput&) = delete;
  AtomicOutput& operator=(const AtomicOutput&) = delete;

  const std::filesystem::path& temp() const { return temp_; }
  const std::filesystem::path& target() const { return target_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path temp_;
  bool committed_ = false;
};

}  // namespace cqr
