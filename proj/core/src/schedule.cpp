#include "fieldpipe/schedule.hpp"

#include "fieldpipe/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fieldpipe {

void StepValueDefinition::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("stepValueDefinition: delta must be positive");
  if (num_steps < 1) throw ValidationError("stepValueDefinition: numSteps must be at least 1");
  if (!std::isfinite(start_time)) throw ValidationError("stepValueDefinition: startTime must be finite");
}

double StepValueDefinition::match_value(std::size_t j) const {
  return start_time + static_cast<double>(start_step + j) * delta;
}

double StepValueDefinition::output_value(std::size_t j) const {
  return delete_offset ? static_cast<double>(start_step + j + 1) * delta : match_value(j);
}

StepSchedule resolve_schedule(const StepValueDefinition& svd, std::span<const StepEntry> available) {
  svd.validate();
  const double tol = 1e-6 * svd.delta;
  StepSchedule schedule;
  schedule.entries.reserve(svd.num_steps);
  for (std::size_t j = 0; j < svd.num_steps; ++j) {
    const double want = svd.match_value(j);
    const auto it = std::lower_bound(available.begin(), available.end(), want,
                                     [](const StepEntry& s, double v) { return s.value < v; });
    const StepEntry* best = nullptr;
    if (it != available.end()) best = &*it;
    if (it != available.begin()) {
      const auto& prev = *(it - 1);
      if (!best || std::abs(prev.value - want) <= std::abs(best->value - want)) best = &prev;
    }
    if (!best || std::abs(best->value - want) > tol) {
      std::ostringstream msg;
      msg.precision(12);
      msg << "schedule entry " << j << ": no input step at value " << want;
      if (best) {
        msg << " (nearest available " << best->value << ")";
      } else {
        msg << " (input has no steps)";
      }
      throw ValidationError(msg.str());
    }
    schedule.entries.push_back({best->index, best->value, want, svd.output_value(j)});
  }
  return schedule;
}

}  // namespace fieldpipe
