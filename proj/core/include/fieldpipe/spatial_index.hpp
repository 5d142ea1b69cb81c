#pragma once

#include "fieldpipe/mesh.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fieldpipe {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Exact k-d tree over a snapshot of 3D points.
///
/// Queries return the same set as a brute-force sort on (squared distance,
/// point index); equal distances are ordered by the lower index. The tree is
/// immutable after construction, so concurrent queries are safe.
class PointIndex {
 public:
  PointIndex() = default;
  explicit PointIndex(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }
  std::span<const Vec3> points() const { return points_; }

  /// k nearest points sorted by ascending distance. Throws
  /// std::invalid_argument when k is 0 or exceeds size().
  std::vector<Neighbor> knn(const Vec3& p, std::size_t k) const;

 private:
  struct Node {
    BoundingBox box;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

inline std::vector<Neighbor> knn(const PointIndex& index, const Vec3& p, std::size_t k) {
  return index.knn(p, k);
}

/// Uniform bucket grid over axis-aligned boxes. Every box is inflated by a
/// relative tolerance so that boundary points are never missed.
class BoxIndex {
 public:
  BoxIndex() = default;
  explicit BoxIndex(std::vector<BoundingBox> boxes, double relative_tolerance = 1e-9);

  std::size_t size() const { return boxes_.size(); }
  const BoundingBox& box(std::size_t i) const { return boxes_[i]; }

  /// Ascending ids of all boxes containing p; a superset of the elements
  /// containing p.
  std::vector<std::size_t> candidates(const Vec3& p) const;

  /// Ascending ids of all boxes intersecting `query` (closed intervals).
  std::vector<std::size_t> overlapping(const BoundingBox& query) const;

 private:
  std::array<std::size_t, 3> cell_of(const Vec3& p) const;
  std::size_t flat(const std::array<std::size_t, 3>& c) const {
    return (c[2] * dims_[1] + c[1]) * dims_[0] + c[0];
  }

  std::vector<BoundingBox> boxes_;
  BoundingBox extent_;
  std::array<std::size_t, 3> dims_{1, 1, 1};
  Vec3 cell_size_ = Vec3::Ones();
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> cell_items_;
};

/// Bounding box of an element's nodes.
BoundingBox element_box(const Mesh& mesh, std::size_t region, std::size_t elem);

}  // namespace fieldpipe
