#pragma once

#include "fieldpipe/field.hpp"
#include "fieldpipe/mesh.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fieldpipe {

enum class ConservativeVariant { CellCentroid, CutCell };

/// Per-step bookkeeping of source integral that found no target element.
struct ConservationReport {
  std::size_t lost_cells = 0;
  std::vector<double> source_integral;  // per lane, sum of f_c V_c
  std::vector<double> lost_integral;    // per lane
};

/// Assembles first-order nodal right-hand-side loads sum_c f_c V N_i from
/// CELL data. The centroid variant assigns V_c through the shape functions
/// at the source centroid inside its containing target element; the cut-cell
/// variant splits V_c over intersection boxes with the target elements and
/// supports axis-aligned HEXA8 meshes only. Loads are accumulated per target
/// region in ascending source-cell order.
class ConservativeInterpolator {
 public:
  ConservativeInterpolator(const Mesh& source, std::vector<std::string> source_regions, const Mesh& target,
                           std::vector<std::string> target_regions, ConservativeVariant variant);

  FieldStep apply(const FieldStep& step, const std::string& output_name,
                  ConservationReport* report = nullptr) const;

  /// Source measure per source cell, in source-region then element order.
  const std::vector<double>& source_measures() const { return measure_; }

 private:
  struct Contribution {
    std::uint32_t slot;   // target region position
    std::uint32_t local;  // node position within the target region
    double weight;        // volume times shape value
  };

  void build_centroid(const Mesh& source, const Mesh& target);
  void build_cutcell(const Mesh& source, const Mesh& target);

  std::vector<std::string> source_regions_;
  std::vector<std::string> target_regions_;
  std::vector<std::size_t> target_sizes_;
  ConservativeVariant variant_;
  std::vector<double> measure_;
  std::vector<double> covered_;
  std::vector<std::size_t> start_{0};
  std::vector<Contribution> contributions_;
};

/// Exact box of an axis-aligned HEXA8 whose nodes match its bounding box
/// corners in reference order; nullopt otherwise (relative tolerance 1e-10).
std::optional<BoundingBox> axis_aligned_hex_box(const Mesh& mesh, std::size_t region, std::size_t elem);

}  // namespace fieldpipe
