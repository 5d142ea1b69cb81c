#pragma once

#include "fieldpipe/field.hpp"
#include "fieldpipe/mesh.hpp"
#include "fieldpipe/sampling.hpp"
#include "fieldpipe/spatial_index.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fieldpipe {

/// Relative distance (times the source bounding-box diagonal) below which a
/// target point is treated as coincident with its nearest source point.
inline constexpr double kCoincidenceTolerance = 1e-12;

/// Sums the nodal values of every cell. Source and target regions are paired
/// by position and must describe the same geometry (coordinates within
/// 1e-12 times the mesh diameter, identical element blocks).
FieldStep node_to_cell(const FieldStep& step, const Mesh& source, std::span<const std::string> source_regions,
                       const Mesh& target, std::span<const std::string> target_regions,
                       const std::string& output_name);

/// Distributes e_c / n_c of every cell to its nodes, summing over the cells
/// of the region in ascending element order.
FieldStep cell_to_node(const FieldStep& step, const Mesh& source, std::span<const std::string> source_regions,
                       const Mesh& target, std::span<const std::string> target_regions,
                       const std::string& output_name);

struct ShepardParams {
  double exponent = 2.0;
  std::size_t neighbours = 8;
  double global_factor = 1.0;
};

/// Normalised inverse-distance weights for neighbours sorted by ascending
/// distance: w_i = ((R - r_i) / (R r_i))^p with R = 1.01 r_max. All
/// distances must be positive.
std::vector<double> shepard_weights(std::span<const Neighbor> neighbours, double exponent);

/// Precomputed Shepard operator between two point sets. The output is
/// defined on the same entity kind as the input.
class ShepardInterpolator {
 public:
  ShepardInterpolator(const Mesh& source, std::vector<std::string> source_regions, const Mesh& target,
                      std::vector<std::string> target_regions, DefinedOn on, ShepardParams params);

  FieldStep apply(const FieldStep& step, const std::string& output_name) const;
  const SparseOperator& op() const { return op_; }

 private:
  PointSet source_;
  PointSet target_;
  ShepardParams params_;
  SparseOperator op_;
};

struct RbfParams {
  std::size_t neighbours = 18;         // N_q
  std::size_t influence_points = 13;   // N_w
  double exponent = 2.0;
  double global_factor = 1.0;
  bool use_elem_as_target = false;
  std::optional<std::string> no_slip_wall;
};

/// Wendland C2 kernel (1 - r/d)^4 (4 r/d + 1) for r < d, else 0.
double wendland_c2(double r, double support);

/// Partition-of-unity RBF operator from source points to target points.
/// Every one of the N_w source points nearest to a target carries a local
/// Wendland interpolant over its N_q nearest source points (support 1.05
/// times the distance to the N_q-th neighbour, constant and linear terms in
/// local principal axes). The local values at the target are blended with
/// Shepard weights using `params.exponent`.
SparseOperator build_rbf_operator(std::span<const Vec3> source, std::span<const Vec3> targets,
                                  const RbfParams& params, double coincidence_distance);

class RbfInterpolator {
 public:
  /// NODE input maps to target nodes, or to target cell centroids when
  /// use_elem_as_target is set; CELL input requires use_elem_as_target.
  RbfInterpolator(const Mesh& source, std::vector<std::string> source_regions, const Mesh& target,
                  std::vector<std::string> target_regions, DefinedOn input_on, RbfParams params);

  FieldStep apply(const FieldStep& step, const std::string& output_name) const;
  const SparseOperator& op() const { return op_; }

 private:
  PointSet source_;
  PointSet target_;
  RbfParams params_;
  SparseOperator op_;
  std::vector<bool> wall_;
};

}  // namespace fieldpipe
