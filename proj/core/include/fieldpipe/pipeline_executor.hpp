#pragma once

#include "fieldpipe/container.hpp"
#include "fieldpipe/pipeline_graph.hpp"
#include "fieldpipe/schedule.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace fieldpipe {

/// A graph whose inputs, schedule and quantity shapes have been checked
/// against the input manifests.
struct ValidatedPipeline {
  PipelineGraph graph;
  std::map<std::string, Manifest> manifests;      // per meshInput id
  std::map<std::string, StepSchedule> schedules;  // per meshInput id
  /// Per filter position: consumed quantity name -> producing filter position.
  std::vector<std::map<std::string, std::size_t>> routes;
  /// Per filter position: key (normalised path) of the mesh its results live on.
  std::vector<std::string> mesh_keys;
};

/// Parses and checks a document without reading any data beyond manifests
/// and Ensight case files. Never creates files.
ValidatedPipeline validate_pipeline(const std::filesystem::path& document);
ValidatedPipeline validate_pipeline(PipelineDocument doc);

struct RunOptions {
  /// Worker threads inside filters; 0 selects the hardware count.
  unsigned threads = 0;
  /// Called before a filter handles schedule entry `j`; may throw to inject
  /// faults.
  std::function<void(const std::string& filter_id, std::size_t j)> before_filter;
};

struct OutputSummary {
  std::filesystem::path path;
  std::size_t steps = 0;
  std::vector<std::string> quantities;
};

struct RunSummary {
  std::size_t steps = 0;
  std::size_t quantities = 0;
  double seconds = 0.0;
  std::vector<OutputSummary> outputs;
};

/// Runs every schedule entry through the graph in topological order. Results
/// of an entry are written after every filter has handled it, so a failure
/// leaves each output container holding all earlier entries.
RunSummary run_pipeline(const ValidatedPipeline& pipeline, const RunOptions& options = {});
RunSummary run_pipeline(const std::filesystem::path& document, const RunOptions& options = {});

}  // namespace fieldpipe
