#include "fieldpipe/point_locator.hpp"

#include <Eigen/Dense>

#include <algorithm>

namespace fieldpipe {

namespace {

constexpr int kNewtonMaxIterations = 30;
constexpr double kNewtonStepTolerance = 1e-12;

double element_size(const Mesh& mesh, const ElementRef& e) {
  BoundingBox b;
  b.lo = b.hi = mesh.node(e.nodes[0]);
  for (auto n : e.nodes) {
    b.lo = b.lo.cwiseMin(mesh.node(n));
    b.hi = b.hi.cwiseMax(mesh.node(n));
  }
  return b.diagonal();
}

Eigen::Matrix3d jacobian(const Mesh& mesh, const ElementRef& e, const Vec3& local) {
  const auto g = shape_gradients(e.type, local);
  Eigen::Matrix3d j = Eigen::Matrix3d::Zero();
  for (int i = 0; i < g.n; ++i) {
    j += mesh.node(e.nodes[static_cast<std::size_t>(i)]) * g.d[static_cast<std::size_t>(i)].transpose();
  }
  return j;
}

// Solves J * step = r; for surface elements only the first two reference
// directions are active and the system is solved in the least-squares sense.
Vec3 newton_step(const Eigen::Matrix3d& j, const Vec3& r, int dim) {
  if (dim == 3) return j.partialPivLu().solve(r);
  const Eigen::Matrix<double, 3, 2> js = j.leftCols<2>();
  const Eigen::Vector2d s = (js.transpose() * js).ldlt().solve(js.transpose() * r);
  return {s[0], s[1], 0.0};
}

// Damped Newton inversion of the isoparametric map starting from `start`.
std::optional<Vec3> newton_invert(const Mesh& mesh, const ElementRef& e, const Vec3& p, Vec3 local) {
  const int dim = dimension(e.type);
  Vec3 residual = p - map_to_physical(mesh, e, local);
  for (int it = 0; it < kNewtonMaxIterations; ++it) {
    const Eigen::Matrix3d j = jacobian(mesh, e, local);
    const Vec3 step = newton_step(j, residual, dim);
    if (!step.allFinite()) return std::nullopt;
    double damping = 1.0;
    Vec3 trial = local + step;
    Vec3 trial_res = p - map_to_physical(mesh, e, trial);
    for (int h = 0; h < 10 && trial_res.norm() > residual.norm(); ++h) {
      damping *= 0.5;
      trial = local + damping * step;
      trial_res = p - map_to_physical(mesh, e, trial);
    }
    local = trial;
    residual = trial_res;
    if ((damping * step).norm() < kNewtonStepTolerance) return local;
  }
  return std::nullopt;
}

bool residual_ok(const Mesh& mesh, const ElementRef& e, const Vec3& p, const Vec3& local) {
  return (p - map_to_physical(mesh, e, local)).norm() <= kLocateTolerance * element_size(mesh, e);
}

std::optional<Vec3> invert_simplex(const Mesh& mesh, const ElementRef& e, const Vec3& p) {
  const Vec3 x0 = mesh.node(e.nodes[0]);
  Eigen::Matrix3d j;
  const int dim = dimension(e.type);
  for (int c = 0; c < dim; ++c) {
    j.col(c) = mesh.node(e.nodes[static_cast<std::size_t>(c + 1)]) - x0;
  }
  if (dim == 2) j.col(2).setZero();
  const Vec3 local = newton_step(j, p - x0, dim);
  if (!local.allFinite()) return std::nullopt;
  if (!reference_contains(e.type, local, kLocateTolerance)) return std::nullopt;
  if (dim == 2 && !residual_ok(mesh, e, p, local)) return std::nullopt;
  return local;
}

// Wedges and pyramids: containment by tetrahedral split, local coordinates
// from the affine image of the reference sub-tetrahedron, refined by Newton.
std::optional<Vec3> invert_by_split(const Mesh& mesh, const ElementRef& e, const Vec3& p) {
  for (const auto& t : sub_tetrahedra(e.type)) {
    Vec3 x[4];
    Vec3 ref[4];
    for (int k = 0; k < 4; ++k) {
      x[k] = mesh.node(e.nodes[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])]);
      ref[k] = reference_node(e.type, t[static_cast<std::size_t>(k)]);
    }
    Eigen::Matrix3d j;
    j << x[1] - x[0], x[2] - x[0], x[3] - x[0];
    const Vec3 bary = j.partialPivLu().solve(p - x[0]);
    if (!bary.allFinite()) continue;
    if (!reference_contains(ElementType::Tetra4, bary, kLocateTolerance)) continue;
    Vec3 guess = ref[0] * (1.0 - bary.sum()) + ref[1] * bary[0] + ref[2] * bary[1] + ref[3] * bary[2];
    if (auto refined = newton_invert(mesh, e, p, guess);
        refined && reference_contains(e.type, *refined, kLocateTolerance) &&
        residual_ok(mesh, e, p, *refined)) {
      return refined;
    }
    return guess;
  }
  return std::nullopt;
}

}  // namespace

Vec3 map_to_physical(const Mesh& mesh, const ElementRef& e, const Vec3& local) {
  const auto s = shape_values_unchecked(e.type, local);
  Vec3 x = Vec3::Zero();
  for (int i = 0; i < s.n; ++i) x += s[i] * mesh.node(e.nodes[static_cast<std::size_t>(i)]);
  return x;
}

std::optional<Vec3> invert_element(const Mesh& mesh, const ElementRef& e, const Vec3& p) {
  switch (e.type) {
    case ElementType::Tetra4:
    case ElementType::Tria3:
      return invert_simplex(mesh, e, p);
    case ElementType::Hexa8:
    case ElementType::Quad4: {
      auto local = newton_invert(mesh, e, p, reference_center(e.type));
      if (!local || !reference_contains(e.type, *local, kLocateTolerance)) return std::nullopt;
      if (!residual_ok(mesh, e, p, *local)) return std::nullopt;
      return local;
    }
    case ElementType::Penta6:
    case ElementType::Pyramid5:
      return invert_by_split(mesh, e, p);
  }
  return std::nullopt;
}

PointLocator::PointLocator(const Mesh& mesh, std::vector<std::size_t> regions)
    : mesh_(&mesh), regions_(std::move(regions)) {
  std::vector<BoundingBox> boxes;
  offsets_.push_back(0);
  for (auto r : regions_) {
    const auto n = mesh.element_count(r);
    for (std::size_t e = 0; e < n; ++e) boxes.push_back(element_box(mesh, r, e));
    offsets_.push_back(offsets_.back() + n);
  }
  boxes_ = BoxIndex(std::move(boxes));
}

std::pair<std::size_t, std::size_t> PointLocator::item(std::size_t id) const {
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), id);
  const auto slot = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  return {slot, id - offsets_[slot]};
}

std::optional<Location> PointLocator::locate(const Vec3& p) const {
  for (auto id : boxes_.candidates(p)) {
    const auto [slot, elem] = item(id);
    const auto region = regions_[slot];
    const auto e = mesh_->element(region, elem);
    if (auto local = invert_element(*mesh_, e, p)) return Location{region, elem, *local};
  }
  return std::nullopt;
}

std::optional<Location> locate_point(const Mesh& mesh, std::span<const std::string> regions,
                                     const Vec3& p) {
  std::vector<std::size_t> ids;
  ids.reserve(regions.size());
  for (const auto& r : regions) ids.push_back(mesh.region_index(r));
  return PointLocator(mesh, std::move(ids)).locate(p);
}

}  // namespace fieldpipe
