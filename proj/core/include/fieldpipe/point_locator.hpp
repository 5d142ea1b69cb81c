#pragma once

#include "fieldpipe/mesh.hpp"
#include "fieldpipe/spatial_index.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fieldpipe {

/// Containing element of a point: region index into Mesh::regions(), element
/// index within that region, and reference coordinates.
struct Location {
  std::size_t region = 0;
  std::size_t elem = 0;
  Vec3 local = Vec3::Zero();
};

inline constexpr double kLocateTolerance = 1e-8;

/// Reference coordinates of p inside element `e`, or nullopt when p lies
/// outside (reference tolerance kLocateTolerance). Tetrahedra and triangles
/// use barycentric coordinates, hexahedra and quadrilaterals a damped Newton
/// inversion, wedges and pyramids a tetrahedral split followed by a Newton
/// refinement of the local coordinates.
std::optional<Vec3> invert_element(const Mesh& mesh, const ElementRef& e, const Vec3& p);

/// Physical position of reference point `local` in element `e`.
Vec3 map_to_physical(const Mesh& mesh, const ElementRef& e, const Vec3& local);

/// Point location over a set of regions of one mesh. The mesh must outlive
/// the locator.
class PointLocator {
 public:
  PointLocator(const Mesh& mesh, std::vector<std::size_t> regions);

  /// Containing element; ties on shared faces go to the lowest
  /// (region order, element index).
  std::optional<Location> locate(const Vec3& p) const;

  const Mesh& mesh() const { return *mesh_; }
  std::span<const std::size_t> regions() const { return regions_; }
  const BoxIndex& boxes() const { return boxes_; }
  /// (region position in regions(), element) for a BoxIndex id.
  std::pair<std::size_t, std::size_t> item(std::size_t id) const;

 private:
  const Mesh* mesh_;
  std::vector<std::size_t> regions_;
  std::vector<std::size_t> offsets_;
  BoxIndex boxes_;
};

/// One-shot convenience wrapper building a PointLocator over named regions.
std::optional<Location> locate_point(const Mesh& mesh, std::span<const std::string> regions,
                                     const Vec3& p);

}  // namespace fieldpipe
