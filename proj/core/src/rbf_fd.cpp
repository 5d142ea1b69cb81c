#include "fieldpipe/rbf_fd.hpp"

#include "fieldpipe/error.hpp"
#include "fieldpipe/log.hpp"
#include "fieldpipe/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace fieldpipe {

namespace {

constexpr double kMinRcond = 1e-17;

std::string format_point(const Vec3& p) {
  std::ostringstream s;
  s.precision(17);
  s << '(' << p.x() << ", " << p.y() << ", " << p.z() << ')';
  return s.str();
}

}  // namespace

void RbfFdSettings::validate(int dimension) const {
  if (!(epsilon_scaling > 0.0)) throw ValidationError("RBF_Settings: epsilonScaling must be positive");
  if (resolved_stencil_size(dimension) < static_cast<std::size_t>(dimension + 2)) {
    throw ValidationError("RBF_Settings: stencilSize must be at least " + std::to_string(dimension + 2));
  }
}

DerivativeStencil build_stencil(const Vec3& target, std::span<const Vec3> points,
                                std::span<const Neighbor> neighbours, const RbfFdSettings& settings,
                                double coincident) {
  DerivativeStencil st;
  st.target = target;
  const auto n = neighbours.size();
  st.sources.reserve(n);
  for (const auto& nb : neighbours) st.sources.push_back(static_cast<std::uint32_t>(nb.index));
  st.min_distance = neighbours.front().distance;
  st.max_distance = neighbours.back().distance;
  const double dmax = st.max_distance;
  if (!(dmax > 0.0)) {
    throw FilterError("RBF differentiation: all stencil points coincide with target " + format_point(target));
  }
  st.epsilon = settings.epsilon_scaling / dmax;
  const double eps2 = st.epsilon * st.epsilon;

  std::vector<Vec3> y(n);
  Vec3 lo = Vec3::Constant(0.0), hi = Vec3::Constant(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = points[neighbours[i].index] - target;
    lo = lo.cwiseMin(y[i]);
    hi = hi.cwiseMax(y[i]);
  }
  const bool use_constant = settings.k_scaling != 0.0;
  std::vector<int> axes;
  if (settings.beta_scaling != 0.0) {
    for (int a = 0; a < 3; ++a) {
      if (hi[a] - lo[a] > 1e-10 * dmax) axes.push_back(a);
    }
  }
  const auto m = static_cast<Eigen::Index>(n + (use_constant ? 1 : 0) + axes.size());
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 4);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = i; j < n; ++j) {
      const double v = std::exp(-eps2 * (y[i] - y[j]).squaredNorm());
      a(ii, static_cast<Eigen::Index>(j)) = a(static_cast<Eigen::Index>(j), ii) = v;
    }
    const double phi = std::exp(-eps2 * y[i].squaredNorm());
    rhs(ii, 0) = phi;
    for (int c = 0; c < 3; ++c) rhs(ii, c + 1) = 2.0 * eps2 * y[i][c] * phi;
    Eigen::Index col = ni;
    if (use_constant) {
      a(ii, col) = a(col, ii) = settings.k_scaling;
      ++col;
    }
    for (const int ax : axes) {
      a(ii, col) = a(col, ii) = settings.beta_scaling * y[i][ax] / dmax;
      ++col;
    }
  }
  Eigen::Index col = ni;
  if (use_constant) {
    rhs(col, 0) = settings.k_scaling;
    ++col;
  }
  for (const int ax : axes) {
    rhs(col, ax + 1) = settings.beta_scaling / dmax;
    ++col;
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(lu.rcond() > kMinRcond)) {
    const double jitter = 1e-12 * a.topLeftCorner(ni, ni).trace() / static_cast<double>(n);
    for (Eigen::Index i = 0; i < ni; ++i) a(i, i) += jitter;
    lu.compute(a);
    if (!(lu.rcond() > kMinRcond)) {
      throw FilterError("RBF differentiation: singular stencil system at target " + format_point(target) +
                        " (epsilon " + std::to_string(st.epsilon) +
                        "); try a larger epsilonScaling to make the basis less flat");
    }
  }
  const Eigen::MatrixXd w = lu.solve(rhs);
  st.value.resize(n);
  for (auto& d : st.d) d.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    st.value[i] = w(ii, 0);
    for (int c = 0; c < 3; ++c) st.d[static_cast<std::size_t>(c)][i] = w(ii, c + 1);
  }
  if (st.min_distance < coincident) {
    std::fill(st.value.begin(), st.value.end(), 0.0);
    st.value[0] = 1.0;
  }
  if (settings.log_eps) {
    logger()->info("RBF stencil at {}: minimal distance {:.6g}, maximal distance {:.6g}, epsilon {:.6g}",
                   format_point(target), st.min_distance, st.max_distance, st.epsilon);
  }
  return st;
}

DerivativeStencil build_stencil(const Vec3& target, const PointIndex& index, const RbfFdSettings& settings,
                                int dimension) {
  settings.validate(dimension);
  const auto k = std::min(settings.resolved_stencil_size(dimension), index.size());
  const auto nb = index.knn(target, k);
  return build_stencil(target, index.points(), nb, settings);
}

std::vector<double> DerivativeOperators::gradient(std::span<const double> scalar) const {
  const auto gx = d[0].apply(scalar, 1);
  const auto gy = d[1].apply(scalar, 1);
  const auto gz = d[2].apply(scalar, 1);
  std::vector<double> out(3 * gx.size());
  for (std::size_t i = 0; i < gx.size(); ++i) {
    out[3 * i] = gx[i];
    out[3 * i + 1] = gy[i];
    out[3 * i + 2] = gz[i];
  }
  return out;
}

std::vector<double> DerivativeOperators::divergence(std::span<const double> vector) const {
  const auto dx = d[0].apply(vector, 3);
  const auto dy = d[1].apply(vector, 3);
  const auto dz = d[2].apply(vector, 3);
  std::vector<double> out(dx.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dx[3 * i] + dy[3 * i + 1] + dz[3 * i + 2];
  return out;
}

std::vector<double> DerivativeOperators::curl(std::span<const double> vector) const {
  const auto dx = d[0].apply(vector, 3);
  const auto dy = d[1].apply(vector, 3);
  const auto dz = d[2].apply(vector, 3);
  std::vector<double> out(dx.size());
  for (std::size_t i = 0; i < out.size() / 3; ++i) {
    out[3 * i] = dy[3 * i + 2] - dz[3 * i + 1];
    out[3 * i + 1] = dz[3 * i] - dx[3 * i + 2];
    out[3 * i + 2] = dx[3 * i + 1] - dy[3 * i];
  }
  return out;
}

DerivativeOperators build_derivative_operators(std::span<const Vec3> source, std::span<const Vec3> targets,
                                               const RbfFdSettings& settings, int dimension,
                                               double coincident) {
  settings.validate(dimension);
  if (source.empty()) throw ValidationError("RBF differentiation: source regions hold no points");
  const auto k = std::min(settings.resolved_stencil_size(dimension), source.size());
  if (k < static_cast<std::size_t>(dimension + 2)) {
    throw ValidationError("RBF differentiation: only " + std::to_string(source.size()) + " source points");
  }
  const PointIndex index(std::vector<Vec3>(source.begin(), source.end()));
  using Row = std::vector<std::pair<std::uint32_t, double>>;
  std::vector<Row> value(targets.size());
  std::array<std::vector<Row>, 3> deriv;
  for (auto& d : deriv) d.resize(targets.size());
  parallel_for(targets.size(), [&](std::size_t t) {
    const auto nb = index.knn(targets[t], k);
    const auto st = build_stencil(targets[t], index.points(), nb, settings, coincident);
    for (std::size_t i = 0; i < st.sources.size(); ++i) {
      value[t].emplace_back(st.sources[i], st.value[i]);
      for (std::size_t c = 0; c < 3; ++c) deriv[c][t].emplace_back(st.sources[i], st.d[c][i]);
    }
  });
  DerivativeOperators ops;
  ops.value = assemble(source.size(), value);
  for (std::size_t c = 0; c < 3; ++c) ops.d[c] = assemble(source.size(), deriv[c]);
  return ops;
}

void require_time_node_field(const FieldStep& step, int components, const char* filter) {
  if (step.quantity.domain != AnalysisDomain::Time) {
    throw ValidationError(std::string(filter) + " does not support FREQUENCY data ('" + step.quantity.name + "')");
  }
  if (step.quantity.defined_on != DefinedOn::Node) {
    throw ValidationError(std::string(filter) + " expects NODE data, but '" + step.quantity.name +
                          "' is defined on CELL");
  }
  if (step.quantity.components != components) {
    throw ValidationError(std::string(filter) + " expects " + (components == 1 ? "a scalar" : "a vector") +
                          " quantity, but '" + step.quantity.name + "' has " +
                          std::to_string(step.quantity.components) + " components");
  }
}

FieldStep make_node_step(const PointSet& set, const std::string& name, int components,
                         std::span<const double> dense, std::size_t step_index, double step_value) {
  FieldStep out;
  out.quantity.name = name;
  out.quantity.defined_on = set.on;
  out.quantity.components = components;
  out.quantity.domain = AnalysisDomain::Time;
  out.quantity.regions = set.regions;
  out.step_index = step_index;
  out.step_value = step_value;
  out.values = scatter(set, dense, components);
  return out;
}

namespace {

int regions_dimension(const Mesh& mesh, const std::vector<std::string>& regions) {
  int dim = 2;
  for (const auto& r : regions) dim = std::max(dim, mesh.region_dimension(mesh.region_index(r)));
  return dim;
}

}  // namespace

Differentiator::Differentiator(const Mesh& source, std::vector<std::string> source_regions, const Mesh& target,
                               std::vector<std::string> target_regions, RbfFdSettings settings)
    : source_(make_point_set(source, source_regions, DefinedOn::Node)),
      target_(make_point_set(target, target_regions, DefinedOn::Node)) {
  ops_ = build_derivative_operators(source_.points, target_.points, settings,
                                    regions_dimension(source, source_regions), 1e-12 * source.diameter());
}

FieldStep Differentiator::apply(SpatialOperator op, const FieldStep& step, const std::string& output_name) const {
  switch (op) {
    case SpatialOperator::Gradient: {
      require_time_node_field(step, 1, "SpaceDifferentiation_Gradient");
      const auto g = ops_.gradient(gather(source_, step));
      return make_node_step(target_, output_name, 3, g, step.step_index, step.step_value);
    }
    case SpatialOperator::Divergence: {
      require_time_node_field(step, 3, "SpaceDifferentiation_Divergence");
      const auto d = ops_.divergence(gather(source_, step));
      return make_node_step(target_, output_name, 1, d, step.step_index, step.step_value);
    }
    case SpatialOperator::Curl: {
      require_time_node_field(step, 3, "SpaceDifferentiation_Curl");
      const auto c = ops_.curl(gather(source_, step));
      return make_node_step(target_, output_name, 3, c, step.step_index, step.step_value);
    }
  }
  throw FilterError("unknown spatial operator");
}

}  // namespace fieldpipe
