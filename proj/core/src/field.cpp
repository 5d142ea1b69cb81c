#include "fieldpipe/field.hpp"

#include "fieldpipe/error.hpp"

#include <algorithm>
#include <cmath>

namespace fieldpipe {

std::string_view to_string(DefinedOn v) { return v == DefinedOn::Node ? "NODE" : "CELL"; }
std::string_view to_string(AnalysisDomain v) {
  return v == AnalysisDomain::Time ? "TIME" : "FREQUENCY";
}
std::string_view to_string(ValueKind v) { return v == ValueKind::Real ? "REAL" : "COMPLEX"; }

std::optional<DefinedOn> defined_on_from_string(std::string_view s) {
  if (s == "NODE") return DefinedOn::Node;
  if (s == "CELL") return DefinedOn::Cell;
  return std::nullopt;
}

std::optional<AnalysisDomain> analysis_domain_from_string(std::string_view s) {
  if (s == "TIME") return AnalysisDomain::Time;
  if (s == "FREQUENCY") return AnalysisDomain::Frequency;
  return std::nullopt;
}

std::optional<ValueKind> value_kind_from_string(std::string_view s) {
  if (s == "REAL") return ValueKind::Real;
  if (s == "COMPLEX") return ValueKind::Complex;
  return std::nullopt;
}

void FieldQuantity::validate() const {
  if (name.empty()) throw ValidationError("quantity with empty name");
  if (components != 1 && components != 3) {
    throw ValidationError("quantity '" + name + "' has " + std::to_string(components) +
                          " components; only 1 or 3 are supported");
  }
}

std::size_t entity_count(const Mesh& mesh, std::size_t region, DefinedOn on) {
  return on == DefinedOn::Node ? mesh.region_nodes(region).size() : mesh.element_count(region);
}

std::optional<std::size_t> FieldStep::region_slot(std::string_view region) const {
  const auto it = std::find(quantity.regions.begin(), quantity.regions.end(), region);
  if (it == quantity.regions.end()) return std::nullopt;
  return static_cast<std::size_t>(it - quantity.regions.begin());
}

std::span<const double> FieldStep::region_values(std::string_view region) const {
  const auto slot = region_slot(region);
  if (!slot) {
    throw ValidationError("quantity '" + quantity.name + "' is not defined on region '" +
                          std::string(region) + "'");
  }
  return values[*slot];
}

std::span<double> FieldStep::region_values(std::string_view region) {
  const auto slot = region_slot(region);
  if (!slot) {
    throw ValidationError("quantity '" + quantity.name + "' is not defined on region '" +
                          std::string(region) + "'");
  }
  return values[*slot];
}

void FieldStep::check_against(const Mesh& mesh) const {
  if (values.size() != quantity.regions.size()) {
    throw ValidationError("quantity '" + quantity.name + "': " + std::to_string(values.size()) +
                          " value arrays for " + std::to_string(quantity.regions.size()) +
                          " regions");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto r = mesh.region_index(quantity.regions[i]);
    const auto expected = entity_count(mesh, r, quantity.defined_on) *
                          static_cast<std::size_t>(quantity.lanes());
    if (values[i].size() != expected) {
      throw ValidationError("quantity '" + quantity.name + "' region '" + quantity.regions[i] +
                            "': " + std::to_string(values[i].size()) + " values, expected " +
                            std::to_string(expected));
    }
  }
}

bool FieldStep::all_finite() const {
  for (const auto& v : values) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

FieldStep make_zero_step(const FieldQuantity& quantity, const Mesh& mesh, std::size_t step_index,
                         double step_value) {
  FieldStep s;
  s.quantity = quantity;
  s.step_index = step_index;
  s.step_value = step_value;
  s.values.reserve(quantity.regions.size());
  for (const auto& name : quantity.regions) {
    const auto r = mesh.region_index(name);
    s.values.emplace_back(entity_count(mesh, r, quantity.defined_on) *
                              static_cast<std::size_t>(quantity.lanes()),
                          0.0);
  }
  return s;
}

}  // namespace fieldpipe
