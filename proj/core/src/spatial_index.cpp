#include "fieldpipe/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace fieldpipe {

namespace {

constexpr std::uint32_t kLeafSize = 12;

struct Candidate {
  double d2;
  std::size_t index;
  bool operator<(const Candidate& o) const {
    return d2 < o.d2 || (d2 == o.d2 && index < o.index);
  }
};

double box_distance2(const BoundingBox& b, const Vec3& p) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    double d = 0.0;
    if (p[a] < b.lo[a]) {
      d = b.lo[a] - p[a];
    } else if (p[a] > b.hi[a]) {
      d = p[a] - b.hi[a];
    }
    d2 += d * d;
  }
  return d2;
}

}  // namespace

PointIndex::PointIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("point index limited to 2^32-1 points");
  }
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t PointIndex::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.box.lo = node.box.hi = points_[order_[begin]];
  for (auto i = begin + 1; i < end; ++i) {
    node.box.lo = node.box.lo.cwiseMin(points_[order_[i]]);
    node.box.hi = node.box.hi.cwiseMax(points_[order_[i]]);
  }
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  int axis = 0;
  (node.box.hi - node.box.lo).maxCoeff(&axis);
  const auto mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

std::vector<Neighbor> PointIndex::knn(const Vec3& p, std::size_t k) const {
  if (k == 0 || k > points_.size()) {
    throw std::invalid_argument("knn: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(points_.size()) + "]");
  }
  // Max-heap on (d2, index): top is the current worst of the best k.
  std::priority_queue<Candidate> best;

  auto visit = [&](auto&& self, std::int32_t id) -> void {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (best.size() == k && box_distance2(n.box, p) > best.top().d2) return;
    if (n.left < 0) {
      for (auto i = n.begin; i < n.end; ++i) {
        const auto idx = order_[i];
        const Candidate c{(points_[idx] - p).squaredNorm(), idx};
        if (best.size() < k) {
          best.push(c);
        } else if (c < best.top()) {
          best.pop();
          best.push(c);
        }
      }
      return;
    }
    const auto& l = nodes_[static_cast<std::size_t>(n.left)];
    const auto& r = nodes_[static_cast<std::size_t>(n.right)];
    if (box_distance2(l.box, p) <= box_distance2(r.box, p)) {
      self(self, n.left);
      self(self, n.right);
    } else {
      self(self, n.right);
      self(self, n.left);
    }
  };
  visit(visit, 0);

  std::vector<Neighbor> out(best.size());
  for (auto i = out.size(); i-- > 0;) {
    out[i] = {best.top().index, std::sqrt(best.top().d2)};
    best.pop();
  }
  return out;
}

BoxIndex::BoxIndex(std::vector<BoundingBox> boxes, double relative_tolerance)
    : boxes_(std::move(boxes)) {
  if (boxes_.empty()) {
    cell_start_.assign(2, 0);
    return;
  }
  extent_ = boxes_.front();
  for (const auto& b : boxes_) {
    extent_.lo = extent_.lo.cwiseMin(b.lo);
    extent_.hi = extent_.hi.cwiseMax(b.hi);
  }
  const double tol = relative_tolerance * std::max(extent_.diagonal(), 1e-300);
  for (auto& b : boxes_) {
    b.lo.array() -= tol;
    b.hi.array() += tol;
  }
  extent_.lo.array() -= tol;
  extent_.hi.array() += tol;

  // Aim for roughly one box per cell, distributing cells by extent.
  const Vec3 size = extent_.hi - extent_.lo;
  const double max_side = size.maxCoeff();
  int active = 0;
  for (int a = 0; a < 3; ++a) active += size[a] > 1e-6 * max_side ? 1 : 0;
  const double n = static_cast<double>(boxes_.size());
  double volume = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (size[a] > 1e-6 * max_side) volume *= size[a];
  }
  const double side = std::pow(volume / n, 1.0 / std::max(active, 1));
  for (int a = 0; a < 3; ++a) {
    std::size_t d = 1;
    if (size[a] > 1e-6 * max_side && side > 0.0) {
      d = static_cast<std::size_t>(std::clamp(std::floor(size[a] / side), 1.0, 512.0));
    }
    dims_[static_cast<std::size_t>(a)] = d;
    cell_size_[a] = size[a] > 0.0 ? size[a] / static_cast<double>(d) : 1.0;
  }

  const std::size_t n_cells = dims_[0] * dims_[1] * dims_[2];
  std::vector<std::uint32_t> counts(n_cells + 1, 0);
  auto for_cells = [&](const BoundingBox& b, auto&& fn) {
    const auto lo = cell_of(b.lo);
    const auto hi = cell_of(b.hi);
    for (auto z = lo[2]; z <= hi[2]; ++z)
      for (auto y = lo[1]; y <= hi[1]; ++y)
        for (auto x = lo[0]; x <= hi[0]; ++x) fn(flat({x, y, z}));
  };
  for (const auto& b : boxes_) for_cells(b, [&](std::size_t c) { ++counts[c + 1]; });
  for (std::size_t c = 0; c < n_cells; ++c) counts[c + 1] += counts[c];
  cell_start_ = counts;
  cell_items_.resize(cell_start_.back());
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::uint32_t i = 0; i < boxes_.size(); ++i) {
    for_cells(boxes_[i], [&](std::size_t c) { cell_items_[fill[c]++] = i; });
  }
}

std::array<std::size_t, 3> BoxIndex::cell_of(const Vec3& p) const {
  std::array<std::size_t, 3> c{};
  for (int a = 0; a < 3; ++a) {
    const double t = (p[a] - extent_.lo[a]) / cell_size_[a];
    const auto d = dims_[static_cast<std::size_t>(a)];
    c[static_cast<std::size_t>(a)] =
        static_cast<std::size_t>(std::clamp(std::floor(t), 0.0, static_cast<double>(d - 1)));
  }
  return c;
}

std::vector<std::size_t> BoxIndex::candidates(const Vec3& p) const {
  std::vector<std::size_t> out;
  if (boxes_.empty() || !extent_.contains(p)) return out;
  const auto c = flat(cell_of(p));
  for (auto i = cell_start_[c]; i < cell_start_[c + 1]; ++i) {
    const auto id = cell_items_[i];
    if (boxes_[id].contains(p)) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> BoxIndex::overlapping(const BoundingBox& q) const {
  std::vector<std::size_t> out;
  if (boxes_.empty()) return out;
  if ((q.hi.array() < extent_.lo.array()).any() || (q.lo.array() > extent_.hi.array()).any()) {
    return out;
  }
  const auto lo = cell_of(q.lo);
  const auto hi = cell_of(q.hi);
  for (auto z = lo[2]; z <= hi[2]; ++z)
    for (auto y = lo[1]; y <= hi[1]; ++y)
      for (auto x = lo[0]; x <= hi[0]; ++x) {
        const auto c = flat({x, y, z});
        for (auto i = cell_start_[c]; i < cell_start_[c + 1]; ++i) {
          const auto id = cell_items_[i];
          const auto& b = boxes_[id];
          if ((b.hi.array() >= q.lo.array()).all() && (b.lo.array() <= q.hi.array()).all()) {
            out.push_back(id);
          }
        }
      }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

BoundingBox element_box(const Mesh& mesh, std::size_t region, std::size_t elem) {
  const auto e = mesh.element(region, elem);
  BoundingBox b;
  b.lo = b.hi = mesh.node(e.nodes[0]);
  for (auto n : e.nodes) {
    const Vec3 p = mesh.node(n);
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  return b;
}

}  // namespace fieldpipe
