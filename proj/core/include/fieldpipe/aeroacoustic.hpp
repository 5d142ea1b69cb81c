#pragma once

#include "fieldpipe/rbf_fd.hpp"

#include <deque>
#include <optional>

namespace fieldpipe {

enum class AeroSource { LambVector, LighthillVector, LighthillScalar };

/// Pointwise a x b over point-major 3-lane arrays.
std::vector<double> cross(std::span<const double> a, std::span<const double> b);

/// Incompressible aeroacoustic source terms from a NODE velocity field u:
///   Lamb vector      L = w x u, with w = curl u unless a vorticity is given
///   Lighthill vector grad(u.u / 2) + L
///   Lighthill scalar div(grad(u.u / 2) + L)
/// u.u / 2 is formed at the source nodes before differentiation. Velocity
/// and vorticity are carried to the target nodes with the stencil value
/// weights. The Lighthill scalar applies a second stencil set from the
/// target nodes to themselves.
class AeroacousticSourceFilter {
 public:
  AeroacousticSourceFilter(AeroSource kind, const Mesh& source, std::vector<std::string> source_regions,
                           const Mesh& target, std::vector<std::string> target_regions, RbfFdSettings settings);

  FieldStep apply(const FieldStep& velocity, const FieldStep* vorticity, const std::string& output_name) const;

  /// Dense per-target results, exposed for composition checks.
  std::vector<double> lamb_vector(const FieldStep& velocity, const FieldStep* vorticity) const;
  std::vector<double> lighthill_vector(const FieldStep& velocity, const FieldStep* vorticity) const;

  const Differentiator& differentiator() const { return diff_; }

 private:
  AeroSource kind_;
  Differentiator diff_;
  std::optional<DerivativeOperators> target_ops_;
};

/// Smooth noise-robust first derivative over five equally spaced samples,
/// (2 (q1 - q-1) + q2 - q-2) / (8 dt), applied per value.
std::vector<double> smooth_derivative(std::span<const double> qm2, std::span<const double> qm1,
                                      std::span<const double> qp1, std::span<const double> qp2, double dt);

/// Five-step sliding window producing the derivative at its centre step.
class TimeDerivative {
 public:
  static constexpr std::size_t kWindow = 5;

  explicit TimeDerivative(std::string output_name) : output_(std::move(output_name)) {}

  /// Appends the next step. Once five steps are held, returns the derivative
  /// at the centre one (same step index and value). Throws on FREQUENCY
  /// data, shape changes or non-uniform step spacing (relative 1e-9).
  std::optional<FieldStep> push(FieldStep step);

 private:
  std::string output_;
  std::deque<FieldStep> window_;
};

}  // namespace fieldpipe
