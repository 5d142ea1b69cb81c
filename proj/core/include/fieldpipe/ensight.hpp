#pragma once

#include "fieldpipe/container.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace fieldpipe {

/// One `<variable CFSVarName=... EnsightVarName=.../>` pair.
struct VariableMapping {
  std::string cfs_name;
  std::string ensight_name;
};
using VariableMap = std::vector<VariableMapping>;

struct EnsightVariable {
  std::string description;
  std::string file_pattern;
  DefinedOn defined_on = DefinedOn::Node;
  int components = 1;
};

/// Parsed `.case` / `.encas` file (single time set).
struct EnsightCase {
  std::filesystem::path case_path;
  std::string geometry_pattern;
  std::vector<EnsightVariable> variables;
  std::size_t step_count = 1;
  std::vector<long> filename_numbers;
  std::vector<double> time_values;

  /// Expands `*` wildcards of `pattern` for step `step` and resolves the path
  /// relative to the case file.
  std::filesystem::path resolve(const std::string& pattern, std::size_t step) const;
  const EnsightVariable* find(std::string_view description) const;
};

EnsightCase parse_ensight_case(const std::filesystem::path& case_path);

/// Region name derived from a part description: trimmed, spaces replaced by
/// underscores.
std::string sanitize_part_name(std::string_view description);

/// Ensight Gold ASCII dataset exposed as a DataSource. Parts become regions;
/// only mapped variables are visible, under their CFS names. Step indices are
/// 0-based positions in the time set.
class EnsightReader final : public DataSource {
 public:
  EnsightReader(const std::filesystem::path& case_path, VariableMap map);

  std::shared_ptr<const Mesh> mesh() const override { return mesh_; }
  const Manifest& manifest() const override { return manifest_; }
  FieldStep read_step(std::string_view quantity, std::size_t step_index) const override;
  const EnsightCase& case_file() const { return case_; }

 private:
  struct Part {
    int number = 0;
    std::size_t region = 0;
    std::size_t node_offset = 0;
    std::size_t node_count = 0;
    std::vector<std::pair<ElementType, std::size_t>> blocks;
  };

  EnsightCase case_;
  VariableMap map_;
  std::shared_ptr<const Mesh> mesh_;
  std::vector<Part> parts_;
  Manifest manifest_;
};

/// Opens an Ensight dataset. When `fix_fv_pyramids_requested` is set a
/// warning notes that the option is ignored.
std::unique_ptr<EnsightReader> read_ensight(const std::filesystem::path& case_path,
                                            const VariableMap& map, bool fix_fv_pyramids_requested);

}  // namespace fieldpipe
