#pragma once

#include "fieldpipe/container.hpp"

#include <span>
#include <vector>

namespace fieldpipe {

/// The <stepValueDefinition><startStop> block.
struct StepValueDefinition {
  std::size_t start_step = 0;
  std::size_t num_steps = 1;
  double start_time = 0.0;
  double delta = 1.0;
  bool delete_offset = false;

  /// Throws ValidationError unless delta > 0 and num_steps >= 1.
  void validate() const;
  /// start_time + (start_step + j) * delta.
  double match_value(std::size_t j) const;
  /// (start_step + j + 1) * delta with delete_offset, else match_value(j).
  double output_value(std::size_t j) const;
};

struct ScheduleEntry {
  std::size_t input_index = 0;  // step index in the input dataset
  double input_value = 0.0;     // its stored value
  double match_value = 0.0;
  double output_value = 0.0;
};

struct StepSchedule {
  std::vector<ScheduleEntry> entries;
  std::size_t size() const { return entries.size(); }
};

/// Matches every requested value to an available step within 1e-6 * delta.
/// Throws ValidationError naming the requested and nearest available value
/// when a match is missing.
StepSchedule resolve_schedule(const StepValueDefinition& svd, std::span<const StepEntry> available);

}  // namespace fieldpipe
