#pragma once

#include "fieldpipe/conservative_filters.hpp"
#include "fieldpipe/ensight.hpp"
#include "fieldpipe/interp_filters.hpp"
#include "fieldpipe/rbf_fd.hpp"
#include "fieldpipe/schedule.hpp"
#include "fieldpipe/xml_document.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fieldpipe {

enum class FilterKind {
  MeshInput,
  MeshOutput,
  Node2Cell,
  Cell2Node,
  NearestNeighbour,
  Rbf,
  ConservativeCellCentroid,
  ConservativeCutCell,
  Gradient,
  Divergence,
  Curl,
  LambVector,
  LighthillVector,
  LighthillScalar,
  TimeDeriv1,
};

/// The `type` string (or element name for meshInput, meshOutput and
/// timeDeriv1) of a filter kind.
std::string_view to_string(FilterKind kind);

struct InputSpec {
  enum class Format { Native, Ensight };
  Format format = Format::Native;
  std::filesystem::path file;
  VariableMap variables;
  bool fix_fv_pyramids = false;
};

struct OutputResult {
  std::string name;
  bool all_regions = true;
  std::vector<std::string> regions;
  int line = 0;
};

struct OutputSpec {
  std::filesystem::path path;
  std::vector<OutputResult> results;
};

/// One filter element of the pipeline document.
struct FilterSpec {
  std::string id;
  FilterKind kind = FilterKind::MeshInput;
  int line = 0;
  std::vector<std::string> inputs;

  std::optional<std::filesystem::path> target_mesh;
  std::string input_quantity;
  std::string output_quantity;
  std::vector<std::string> source_regions;
  std::vector<std::string> target_regions;

  ShepardParams shepard;
  RbfParams rbf;
  RbfFdSettings rbf_fd;

  std::string velocity;
  std::optional<std::string> vorticity;

  InputSpec input;
  OutputSpec output;

  /// Quantity names read from the input filters.
  std::vector<std::string> consumed() const;
  /// Quantity names this filter emits (empty for meshInput, whose names come
  /// from the dataset, and for meshOutput).
  std::vector<std::string> produced() const;
  bool is_spatial_derivative() const;
  /// "<element> '<id>' (line N)" for error messages.
  std::string where() const;
};

struct PipelineDocument {
  std::filesystem::path path;
  std::filesystem::path base_dir;
  StepValueDefinition steps;
  std::vector<FilterSpec> filters;  // document order
};

/// Parses a `<cfsdat><pipeline>` document. File paths are resolved relative
/// to `base_dir`. Throws ValidationError with line context.
PipelineDocument parse_pipeline(const XmlElement& root, const std::filesystem::path& document_path);
PipelineDocument parse_pipeline_file(const std::filesystem::path& path);
PipelineDocument parse_pipeline_string(std::string_view xml, const std::filesystem::path& document_path);

/// Static shape of a quantity as it flows through the graph.
struct QuantityShape {
  DefinedOn defined_on = DefinedOn::Node;
  int components = 1;
  AnalysisDomain domain = AnalysisDomain::Time;
  std::optional<std::vector<std::string>> regions;  // unknown until run time when absent
};

/// Quantities available from each meshInput, keyed by input id.
using InputCatalog = std::map<std::string, std::map<std::string, QuantityShape>>;

/// Validated DAG in execution order.
struct PipelineGraph {
  PipelineDocument doc;
  /// Filter positions (into doc.filters) in topological order; ties follow
  /// document order.
  std::vector<std::size_t> order;
  std::map<std::string, std::size_t> index;
  /// Output shapes per filter position, filled by check_quantities().
  std::vector<std::map<std::string, QuantityShape>> shapes;

  const FilterSpec& filter(std::string_view id) const { return doc.filters.at(index.at(std::string(id))); }
};

/// Checks ids, references, acyclicity, reachability and the
/// input/output structure. Cycle errors report the cycle path.
PipelineGraph build_graph(PipelineDocument doc);

/// Propagates quantity shapes from the input catalog through the graph,
/// checking that every consumed name is produced by exactly one input filter,
/// that filters receive the shapes they accept, that meshOutput region lists
/// name regions the result covers and that timeDeriv1 sees at least five
/// steps. Reserved solver names with an unexpected shape only warn.
void check_quantities(PipelineGraph& graph, const InputCatalog& catalog, std::size_t num_steps);

/// Expected component count of a reserved solver quantity name, if reserved.
std::optional<int> reserved_components(std::string_view name);

}  // namespace fieldpipe
