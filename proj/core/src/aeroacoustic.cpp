#include "fieldpipe/aeroacoustic.hpp"

#include "fieldpipe/error.hpp"

namespace fieldpipe {

namespace {

const char* filter_name(AeroSource kind) {
  switch (kind) {
    case AeroSource::LambVector: return "AeroacousticSource_LambVector";
    case AeroSource::LighthillVector: return "AeroacousticSource_LighthillSourceTermVector";
    case AeroSource::LighthillScalar: return "AeroacousticSource_LighthillSourceTerm";
  }
  return "aeroacoustic";
}

int regions_dimension(const Mesh& mesh, const std::vector<std::string>& regions) {
  int dim = 2;
  for (const auto& r : regions) dim = std::max(dim, mesh.region_dimension(mesh.region_index(r)));
  return dim;
}

}  // namespace

std::vector<double> cross(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i + 2 < a.size(); i += 3) {
    out[i] = a[i + 1] * b[i + 2] - a[i + 2] * b[i + 1];
    out[i + 1] = a[i + 2] * b[i] - a[i] * b[i + 2];
    out[i + 2] = a[i] * b[i + 1] - a[i + 1] * b[i];
  }
  return out;
}

AeroacousticSourceFilter::AeroacousticSourceFilter(AeroSource kind, const Mesh& source,
                                                   std::vector<std::string> source_regions, const Mesh& target,
                                                   std::vector<std::string> target_regions, RbfFdSettings settings)
    : kind_(kind), diff_(source, source_regions, target, target_regions, settings) {
  if (kind_ == AeroSource::LighthillScalar) {
    const auto& pts = diff_.targets().points;
    target_ops_ = build_derivative_operators(pts, pts, settings, regions_dimension(target, target_regions),
                                             1e-12 * target.diameter());
  }
}

std::vector<double> AeroacousticSourceFilter::lamb_vector(const FieldStep& velocity,
                                                          const FieldStep* vorticity) const {
  const char* name = filter_name(kind_);
  require_time_node_field(velocity, 3, name);
  const auto& ops = diff_.operators();
  const auto u_src = gather(diff_.sources(), velocity);
  const auto u = ops.value.apply(u_src, 3);
  std::vector<double> omega;
  if (vorticity) {
    require_time_node_field(*vorticity, 3, name);
    omega = ops.value.apply(gather(diff_.sources(), *vorticity), 3);
  } else {
    omega = ops.curl(u_src);
  }
  return cross(omega, u);
}

std::vector<double> AeroacousticSourceFilter::lighthill_vector(const FieldStep& velocity,
                                                               const FieldStep* vorticity) const {
  auto result = lamb_vector(velocity, vorticity);
  const auto u_src = gather(diff_.sources(), velocity);
  std::vector<double> kinetic(u_src.size() / 3);
  for (std::size_t i = 0; i < kinetic.size(); ++i) {
    const double* u = u_src.data() + 3 * i;
    kinetic[i] = 0.5 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  }
  const auto grad = diff_.operators().gradient(kinetic);
  for (std::size_t i = 0; i < result.size(); ++i) result[i] = grad[i] + result[i];
  return result;
}

FieldStep AeroacousticSourceFilter::apply(const FieldStep& velocity, const FieldStep* vorticity,
                                          const std::string& output_name) const {
  const auto& target = diff_.targets();
  switch (kind_) {
    case AeroSource::LambVector:
      return make_node_step(target, output_name, 3, lamb_vector(velocity, vorticity), velocity.step_index,
                            velocity.step_value);
    case AeroSource::LighthillVector:
      return make_node_step(target, output_name, 3, lighthill_vector(velocity, vorticity), velocity.step_index,
                            velocity.step_value);
    case AeroSource::LighthillScalar: {
      const auto div = target_ops_->divergence(lighthill_vector(velocity, vorticity));
      return make_node_step(target, output_name, 1, div, velocity.step_index, velocity.step_value);
    }
  }
  throw FilterError("unknown aeroacoustic source");
}

}  // namespace fieldpipe
