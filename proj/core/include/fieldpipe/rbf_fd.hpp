#pragma once

#include "fieldpipe/field.hpp"
#include "fieldpipe/mesh.hpp"
#include "fieldpipe/sampling.hpp"
#include "fieldpipe/spatial_index.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace fieldpipe {

struct RbfFdSettings {
  double epsilon_scaling = 0.1;
  double beta_scaling = 1.0;
  double k_scaling = 1.0;
  bool log_eps = false;
  /// 0 selects 32 neighbours for volume meshes and 12 for surface meshes.
  std::size_t stencil_size = 0;

  std::size_t resolved_stencil_size(int dimension) const {
    return stencil_size != 0 ? stencil_size : (dimension == 2 ? 12 : 32);
  }
  /// Throws ValidationError on epsilon_scaling <= 0 or a stencil smaller
  /// than dimension + 2.
  void validate(int dimension) const;
};

/// Weights of one target point. `value` interpolates, `d[0..2]`
/// differentiate along x, y and z.
struct DerivativeStencil {
  Vec3 target = Vec3::Zero();
  std::vector<std::uint32_t> sources;
  std::vector<double> value;
  std::array<std::vector<double>, 3> d;
  double epsilon = 0.0;
  double min_distance = 0.0;
  double max_distance = 0.0;
};

/// Local Gaussian RBF system exp(-(eps r)^2) over the given neighbours with
/// eps = epsilon_scaling / d_max, augmented by a constant scaled by
/// k_scaling and linear terms scaled by beta_scaling (a zero scale drops the
/// term; linear terms along degenerate stencil axes are dropped). Distances
/// are taken relative to the target. A target within `coincident` of its
/// nearest source copies that source value.
DerivativeStencil build_stencil(const Vec3& target, std::span<const Vec3> points,
                                std::span<const Neighbor> neighbours, const RbfFdSettings& settings,
                                double coincident = 0.0);

/// Convenience overload selecting the stencil_size nearest points.
DerivativeStencil build_stencil(const Vec3& target, const PointIndex& index, const RbfFdSettings& settings,
                                int dimension = 3);

/// Value and derivative operators from one point set to another.
struct DerivativeOperators {
  SparseOperator value;
  std::array<SparseOperator, 3> d;

  /// Dense per-point gradient (3 lanes) of a scalar.
  std::vector<double> gradient(std::span<const double> scalar) const;
  /// Divergence of a 3-lane vector.
  std::vector<double> divergence(std::span<const double> vector) const;
  /// Curl of a 3-lane vector.
  std::vector<double> curl(std::span<const double> vector) const;
};

DerivativeOperators build_derivative_operators(std::span<const Vec3> source, std::span<const Vec3> targets,
                                               const RbfFdSettings& settings, int dimension,
                                               double coincident);

enum class SpatialOperator { Gradient, Divergence, Curl };

/// Gradient, divergence or curl of NODE data on the source regions,
/// evaluated at the nodes of the target regions.
class Differentiator {
 public:
  Differentiator(const Mesh& source, std::vector<std::string> source_regions, const Mesh& target,
                 std::vector<std::string> target_regions, RbfFdSettings settings);

  FieldStep apply(SpatialOperator op, const FieldStep& step, const std::string& output_name) const;

  const PointSet& sources() const { return source_; }
  const PointSet& targets() const { return target_; }
  const DerivativeOperators& operators() const { return ops_; }

 private:
  PointSet source_;
  PointSet target_;
  DerivativeOperators ops_;
};

/// Throws ValidationError unless the step is real NODE data with the given
/// component count.
void require_time_node_field(const FieldStep& step, int components, const char* filter);

/// Builds a NODE quantity on `set` carrying dense point-major values.
FieldStep make_node_step(const PointSet& set, const std::string& name, int components,
                         std::span<const double> dense, std::size_t step_index, double step_value);

}  // namespace fieldpipe
