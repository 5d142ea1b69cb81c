#include "fieldpipe/interp_filters.hpp"

#include "fieldpipe/error.hpp"
#include "fieldpipe/log.hpp"
#include "fieldpipe/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <sstream>

namespace fieldpipe {

namespace {

FieldQuantity derived_quantity(const FieldQuantity& in, const std::string& name, DefinedOn on,
                               std::vector<std::string> regions) {
  FieldQuantity q = in;
  q.name = name;
  q.defined_on = on;
  q.regions = std::move(regions);
  return q;
}

std::string format_point(const Vec3& p) {
  std::ostringstream s;
  s.precision(17);
  s << '(' << p.x() << ", " << p.y() << ", " << p.z() << ')';
  return s.str();
}

// Source and target regions paired by position must carry the same elements
// on coincident nodes.
void check_same_geometry(const Mesh& source, std::span<const std::string> source_regions, const Mesh& target,
                         std::span<const std::string> target_regions, const char* filter) {
  if (source_regions.size() != target_regions.size()) {
    throw ValidationError(std::string(filter) + ": " + std::to_string(source_regions.size()) +
                          " source regions but " + std::to_string(target_regions.size()) + " target regions");
  }
  if (source.node_count() != target.node_count()) {
    throw ValidationError(std::string(filter) + ": target mesh has " + std::to_string(target.node_count()) +
                          " nodes, source mesh " + std::to_string(source.node_count()));
  }
  const double tol = 1e-12 * std::max(source.diameter(), 1.0);
  for (std::size_t i = 0; i < source.node_count(); ++i) {
    if ((source.node(i) - target.node(i)).norm() > tol) {
      throw ValidationError(std::string(filter) + ": target node " + std::to_string(i) +
                            " does not coincide with the source node");
    }
  }
  for (std::size_t k = 0; k < source_regions.size(); ++k) {
    const auto& a = source.regions()[source.region_index(source_regions[k])];
    const auto& b = target.regions()[target.region_index(target_regions[k])];
    if (a.blocks != b.blocks) {
      throw ValidationError(std::string(filter) + ": target region '" + b.name +
                            "' has different elements than source region '" + a.name + "'");
    }
  }
}

void require_on(const FieldStep& step, DefinedOn on, const char* filter) {
  if (step.quantity.defined_on != on) {
    throw ValidationError(std::string(filter) + " expects " + std::string(to_string(on)) + " data, but '" +
                          step.quantity.name + "' is defined on " +
                          std::string(to_string(step.quantity.defined_on)));
  }
}

}  // namespace

FieldStep node_to_cell(const FieldStep& step, const Mesh& source, std::span<const std::string> source_regions,
                       const Mesh& target, std::span<const std::string> target_regions,
                       const std::string& output_name) {
  require_on(step, DefinedOn::Node, "Node2Cell");
  check_same_geometry(source, source_regions, target, target_regions, "Node2Cell");
  FieldStep out;
  out.quantity = derived_quantity(step.quantity, output_name, DefinedOn::Cell,
                                  {target_regions.begin(), target_regions.end()});
  out.step_index = step.step_index;
  out.step_value = step.step_value;
  const auto lanes = static_cast<std::size_t>(step.quantity.lanes());
  for (std::size_t k = 0; k < source_regions.size(); ++k) {
    const auto r = source.region_index(source_regions[k]);
    const auto in = step.region_values(source_regions[k]);
    const auto n = source.element_count(r);
    std::vector<double> cells(n * lanes, 0.0);
    for (std::size_t e = 0; e < n; ++e) {
      for (const auto node : source.element(r, e).nodes) {
        const auto local = *source.local_node(r, node);
        for (std::size_t l = 0; l < lanes; ++l) cells[e * lanes + l] += in[local * lanes + l];
      }
    }
    out.values.push_back(std::move(cells));
  }
  return out;
}

FieldStep cell_to_node(const FieldStep& step, const Mesh& source, std::span<const std::string> source_regions,
                       const Mesh& target, std::span<const std::string> target_regions,
                       const std::string& output_name) {
  require_on(step, DefinedOn::Cell, "Cell2Node");
  check_same_geometry(source, source_regions, target, target_regions, "Cell2Node");
  FieldStep out;
  out.quantity = derived_quantity(step.quantity, output_name, DefinedOn::Node,
                                  {target_regions.begin(), target_regions.end()});
  out.step_index = step.step_index;
  out.step_value = step.step_value;
  const auto lanes = static_cast<std::size_t>(step.quantity.lanes());
  for (std::size_t k = 0; k < source_regions.size(); ++k) {
    const auto r = source.region_index(source_regions[k]);
    const auto in = step.region_values(source_regions[k]);
    std::vector<double> nodes(source.region_nodes(r).size() * lanes, 0.0);
    const auto n = source.element_count(r);
    for (std::size_t e = 0; e < n; ++e) {
      const auto elem = source.element(r, e);
      const double share = 1.0 / static_cast<double>(elem.nodes.size());
      for (const auto node : elem.nodes) {
        const auto local = *source.local_node(r, node);
        for (std::size_t l = 0; l < lanes; ++l) nodes[local * lanes + l] += in[e * lanes + l] * share;
      }
    }
    out.values.push_back(std::move(nodes));
  }
  return out;
}

std::vector<double> shepard_weights(std::span<const Neighbor> neighbours, double exponent) {
  const double r_max = neighbours.back().distance;
  const double big_r = 1.01 * r_max;
  std::vector<double> w(neighbours.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < neighbours.size(); ++i) {
    const double r = neighbours[i].distance;
    w[i] = std::pow((big_r - r) / (big_r * r), exponent);
    sum += w[i];
  }
  for (auto& x : w) x /= sum;
  return w;
}

ShepardInterpolator::ShepardInterpolator(const Mesh& source, std::vector<std::string> source_regions,
                                         const Mesh& target, std::vector<std::string> target_regions,
                                         DefinedOn on, ShepardParams params)
    : source_(make_point_set(source, source_regions, on)),
      target_(make_point_set(target, target_regions, on)),
      params_(params) {
  if (params_.neighbours == 0) throw ValidationError("NearestNeighbour: numNeighbours must be at least 1");
  if (params_.exponent < 1.0 || params_.exponent > 3.0) {
    logger()->warn("NearestNeighbour: interpolationExponent {} lies outside [1, 3]", params_.exponent);
  }
  if (source_.size() == 0) throw ValidationError("NearestNeighbour: source regions hold no points");
  if (params_.neighbours > source_.size()) {
    throw ValidationError("NearestNeighbour: numNeighbours " + std::to_string(params_.neighbours) +
                          " exceeds the " + std::to_string(source_.size()) + " source points");
  }
  const PointIndex index(source_.points);
  const double coincident = kCoincidenceTolerance * source.diameter();
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(target_.size());
  parallel_for(target_.size(), [&](std::size_t t) {
    const auto nb = index.knn(target_.points[t], params_.neighbours);
    auto& row = rows[t];
    if (nb.front().distance < coincident) {
      row.emplace_back(static_cast<std::uint32_t>(nb.front().index), 1.0);
      return;
    }
    const auto w = shepard_weights(nb, params_.exponent);
    for (std::size_t i = 0; i < nb.size(); ++i) row.emplace_back(static_cast<std::uint32_t>(nb[i].index), w[i]);
  });
  op_ = assemble(source_.size(), rows);
}

FieldStep ShepardInterpolator::apply(const FieldStep& step, const std::string& output_name) const {
  require_on(step, source_.on, "NearestNeighbour");
  const int lanes = step.quantity.lanes();
  auto dense = op_.apply(gather(source_, step), lanes);
  for (auto& v : dense) v *= params_.global_factor;
  FieldStep out;
  out.quantity = derived_quantity(step.quantity, output_name, target_.on, target_.regions);
  out.step_index = step.step_index;
  out.step_value = step.step_value;
  out.values = scatter(target_, dense, lanes);
  return out;
}

double wendland_c2(double r, double support) {
  const double q = r / support;
  if (q >= 1.0) return 0.0;
  const double a = 1.0 - q;
  return a * a * a * a * (4.0 * q + 1.0);
}

namespace {

// Local interpolant around one source point: cardinal weights of the
// neighbours for evaluation at `target`.
void local_fit_weights(std::span<const Vec3> source, const PointIndex& index, std::size_t centre,
                       std::size_t nq, const Vec3& target, double blend,
                       std::map<std::uint32_t, double>& row) {
  const auto nb = index.knn(source[centre], nq);
  const double support = 1.05 * nb.back().distance;
  const Vec3 origin = source[centre];
  if (!(support > 0.0)) {
    // All neighbours coincide with the centre: the fit is the centre value.
    row[static_cast<std::uint32_t>(centre)] += blend;
    return;
  }
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& n : nb) mean += source[n.index];
  mean /= static_cast<double>(nb.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& n : nb) {
    const Eigen::Vector3d d = source[n.index] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const double top = eig.eigenvalues().maxCoeff();
  std::vector<Eigen::Vector3d> axes;
  for (int a = 2; a >= 0; --a) {
    if (top > 0.0 && eig.eigenvalues()[a] > 1e-10 * top) axes.push_back(eig.eigenvectors().col(a));
  }
  const auto n = nb.size();
  const auto m = n + 1 + axes.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const Vec3& xi = source[nb[i].index];
    for (std::size_t j = 0; j < n; ++j) {
      a(ii, static_cast<Eigen::Index>(j)) = wendland_c2((xi - source[nb[j].index]).norm(), support);
    }
    a(ii, static_cast<Eigen::Index>(n)) = a(static_cast<Eigen::Index>(n), ii) = 1.0;
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(n + 1 + k);
      a(ii, col) = a(col, ii) = axes[k].dot(xi - origin) / support;
    }
    b[ii] = wendland_c2((target - xi).norm(), support);
  }
  b[static_cast<Eigen::Index>(n)] = 1.0;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    b[static_cast<Eigen::Index>(n + 1 + k)] = axes[k].dot(target - origin) / support;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-15)) {
    const double jitter = 1e-12 * a.topLeftCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)).trace() /
                          static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += jitter;
    lu.compute(a);
    if (!(lu.rcond() > 1e-15)) {
      throw FilterError("RBF interpolation: singular local system around source point " + format_point(origin) +
                        " for target " + format_point(target));
    }
  }
  const Eigen::VectorXd w = lu.solve(b);
  for (std::size_t i = 0; i < n; ++i) row[static_cast<std::uint32_t>(nb[i].index)] += blend * w[static_cast<Eigen::Index>(i)];
}

}  // namespace

SparseOperator build_rbf_operator(std::span<const Vec3> source, std::span<const Vec3> targets,
                                  const RbfParams& params, double coincidence_distance) {
  if (source.empty()) throw ValidationError("RBF interpolation: source regions hold no points");
  if (params.influence_points == 0 || params.neighbours == 0) {
    throw ValidationError("RBF interpolation: numNeighbours and numNeighbours_weight must be positive");
  }
  if (params.influence_points > params.neighbours) {
    throw ValidationError("RBF interpolation: numNeighbours_weight (" + std::to_string(params.influence_points) +
                          ") exceeds numNeighbours (" + std::to_string(params.neighbours) + ")");
  }
  const auto nq = std::min(params.neighbours, source.size());
  const auto nw = std::min(params.influence_points, source.size());
  if (nq < params.neighbours) {
    logger()->warn("RBF interpolation: only {} source points, numNeighbours reduced from {}", source.size(),
                   params.neighbours);
  }
  const PointIndex index(std::vector<Vec3>(source.begin(), source.end()));
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(targets.size());
  parallel_for(targets.size(), [&](std::size_t t) {
    const auto nb = index.knn(targets[t], nw);
    auto& row = rows[t];
    if (nb.front().distance < coincidence_distance) {
      row.emplace_back(static_cast<std::uint32_t>(nb.front().index), 1.0);
      return;
    }
    const auto blend = shepard_weights(nb, params.exponent);
    std::map<std::uint32_t, double> acc;
    for (std::size_t j = 0; j < nb.size(); ++j) {
      local_fit_weights(source, index, nb[j].index, nq, targets[t], blend[j], acc);
    }
    row.assign(acc.begin(), acc.end());
  });
  return assemble(source.size(), rows);
}

RbfInterpolator::RbfInterpolator(const Mesh& source, std::vector<std::string> source_regions, const Mesh& target,
                                 std::vector<std::string> target_regions, DefinedOn input_on, RbfParams params)
    : params_(std::move(params)) {
  if (input_on == DefinedOn::Cell && !params_.use_elem_as_target) {
    throw ValidationError("RBF interpolation: CELL data can only be interpolated to cell centroids "
                          "(set useElemAsTarget)");
  }
  source_ = make_point_set(source, source_regions, input_on);
  target_ = make_point_set(target, target_regions, params_.use_elem_as_target ? DefinedOn::Cell : DefinedOn::Node);
  op_ = build_rbf_operator(source_.points, target_.points, params_, kCoincidenceTolerance * source.diameter());
  wall_.assign(target_.size(), false);
  if (params_.no_slip_wall) {
    const auto wall = target.find_region(*params_.no_slip_wall);
    if (!wall) {
      throw ValidationError("RBF interpolation: noSlipWall region '" + *params_.no_slip_wall +
                            "' not found in the target mesh");
    }
    if (params_.use_elem_as_target) {
      logger()->warn("RBF interpolation: noSlipWall applies to nodal targets only; ignored with useElemAsTarget");
    } else {
      std::vector<bool> on_wall(target.node_count(), false);
      for (const auto n : target.region_nodes(*wall)) on_wall[n] = true;
      for (std::size_t i = 0; i < target_.size(); ++i) wall_[i] = on_wall[target_.node_ids[i]];
    }
  }
}

FieldStep RbfInterpolator::apply(const FieldStep& step, const std::string& output_name) const {
  require_on(step, source_.on, "RBF interpolation");
  const int lanes = step.quantity.lanes();
  auto dense = op_.apply(gather(source_, step), lanes);
  const auto nl = static_cast<std::size_t>(lanes);
  for (std::size_t i = 0; i < target_.size(); ++i) {
    for (std::size_t l = 0; l < nl; ++l) {
      dense[i * nl + l] = wall_[i] ? 0.0 : dense[i * nl + l] * params_.global_factor;
    }
  }
  FieldStep out;
  out.quantity = derived_quantity(step.quantity, output_name, target_.on, target_.regions);
  out.step_index = step.step_index;
  out.step_value = step.step_value;
  out.values = scatter(target_, dense, lanes);
  return out;
}

}  // namespace fieldpipe
