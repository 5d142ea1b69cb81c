#pragma once

#include "fieldpipe/field.hpp"
#include "fieldpipe/mesh.hpp"

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fieldpipe {

inline constexpr int kFormatVersion = 1;

struct StepEntry {
  std::size_t index = 0;
  double value = 0.0;
  bool operator==(const StepEntry&) const = default;
};

struct QuantityEntry {
  FieldQuantity quantity;
  /// Entity count per region, parallel to quantity.regions.
  std::vector<std::size_t> entity_counts;
  /// Step indices for which a result file exists, ascending.
  std::vector<std::size_t> steps;
  bool operator==(const QuantityEntry&) const = default;
};

/// Contents of manifest.json.
struct Manifest {
  int format_version = kFormatVersion;
  AnalysisDomain analysis = AnalysisDomain::Time;
  std::vector<StepEntry> steps;
  std::vector<QuantityEntry> quantities;

  /// Throws ValidationError on non-increasing step values, duplicate step
  /// indices, duplicate quantity names or a domain mismatch.
  void validate() const;
  const QuantityEntry* find(std::string_view name) const;
  const StepEntry* find_step(std::size_t index) const;
  bool operator==(const Manifest&) const = default;
};

/// A readable dataset: mesh, manifest and random-access step payloads.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual std::shared_ptr<const Mesh> mesh() const = 0;
  virtual const Manifest& manifest() const = 0;
  /// Loads one step of one quantity. Reading step k never touches other steps.
  virtual FieldStep read_step(std::string_view quantity, std::size_t step_index) const = 0;
};

/// Reader over a native `.cfsd` container directory.
class NativeReader final : public DataSource {
 public:
  explicit NativeReader(std::filesystem::path root);

  std::shared_ptr<const Mesh> mesh() const override { return mesh_; }
  const Manifest& manifest() const override { return manifest_; }
  FieldStep read_step(std::string_view quantity, std::size_t step_index) const override;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::shared_ptr<const Mesh> mesh_;
  Manifest manifest_;
};

/// Incremental writer. The mesh is written on construction; each
/// write_step() call persists its result files (temp file + rename) and then
/// rewrites manifest.json, so an aborted run leaves a valid container
/// holding every completed step.
class NativeWriter {
 public:
  /// Replaces an existing container at `root`; refuses to touch a
  /// non-empty directory that is not a container.
  NativeWriter(std::filesystem::path root, std::shared_ptr<const Mesh> mesh, AnalysisDomain analysis);

  /// Registers a quantity before its first step is written.
  void declare(const FieldQuantity& quantity);
  /// Persists results for one step. Every step must carry a declared
  /// quantity. A new step index must follow the last one in index and
  /// value; an existing index (same value) may receive further quantities,
  /// provided each quantity's own step list stays ascending.
  void write_step(std::size_t index, double value, std::span<const FieldStep> results);

  const Manifest& manifest() const { return manifest_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  void write_manifest() const;

  std::filesystem::path root_;
  std::shared_ptr<const Mesh> mesh_;
  Manifest manifest_;
};

/// Opens a native container.
std::unique_ptr<NativeReader> read_native(const std::filesystem::path& root);

/// Writes a complete container in one call. Per-quantity step lists of the
/// written manifest are derived from `steps`.
void write_native(const std::filesystem::path& root, const Mesh& mesh, const Manifest& manifest,
                  std::span<const FieldStep> steps);

/// Reads and validates manifest.json only; no mesh or step data is touched.
Manifest read_manifest(const std::filesystem::path& root);

/// Reads only the geometry (mesh.json, nodes.bin, connectivity files).
std::shared_ptr<const Mesh> read_target_mesh(const std::filesystem::path& root);

/// Writes geometry-only container with an empty manifest.
void write_mesh_only(const std::filesystem::path& root, const Mesh& mesh, AnalysisDomain analysis);

}  // namespace fieldpipe
