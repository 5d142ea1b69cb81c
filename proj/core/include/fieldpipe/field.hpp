#pragma once

#include "fieldpipe/mesh.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fieldpipe {

enum class DefinedOn { Node, Cell };
enum class AnalysisDomain { Time, Frequency };
enum class ValueKind { Real, Complex };

std::string_view to_string(DefinedOn v);
std::string_view to_string(AnalysisDomain v);
std::string_view to_string(ValueKind v);
std::optional<DefinedOn> defined_on_from_string(std::string_view s);
std::optional<AnalysisDomain> analysis_domain_from_string(std::string_view s);
std::optional<ValueKind> value_kind_from_string(std::string_view s);

/// Descriptor of a result quantity. TIME data is real, FREQUENCY data is
/// complex; complex arrays interleave (re, im) per component.
struct FieldQuantity {
  std::string name;
  DefinedOn defined_on = DefinedOn::Node;
  int components = 1;
  AnalysisDomain domain = AnalysisDomain::Time;
  std::vector<std::string> regions;

  ValueKind value_kind() const {
    return domain == AnalysisDomain::Time ? ValueKind::Real : ValueKind::Complex;
  }
  /// Number of doubles stored per entity.
  int lanes() const { return components * (value_kind() == ValueKind::Complex ? 2 : 1); }
  bool is_vector() const { return components == 3; }

  /// Throws ValidationError if components is not 1 or 3 or the name is empty.
  void validate() const;

  bool operator==(const FieldQuantity&) const = default;
};

/// Number of entities of `on` kind in a mesh region.
std::size_t entity_count(const Mesh& mesh, std::size_t region, DefinedOn on);

/// One step of a quantity. `values[i]` belongs to `quantity.regions[i]`,
/// entity-major with lanes contiguous per entity.
struct FieldStep {
  FieldQuantity quantity;
  std::size_t step_index = 0;
  double step_value = 0.0;
  std::vector<std::vector<double>> values;

  std::span<const double> region_values(std::string_view region) const;
  std::span<double> region_values(std::string_view region);
  std::optional<std::size_t> region_slot(std::string_view region) const;

  /// Throws ValidationError unless every array matches the mesh entity count.
  void check_against(const Mesh& mesh) const;
  bool all_finite() const;
};

/// A zero-initialised step shaped for `quantity` on `mesh`.
FieldStep make_zero_step(const FieldQuantity& quantity, const Mesh& mesh, std::size_t step_index,
                         double step_value);

}  // namespace fieldpipe
