#pragma once

#include "fieldpipe/element.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fieldpipe {

/// Elements of one type, connectivity element-major, 0-based node indices.
struct ElementBlock {
  ElementType type = ElementType::Tetra4;
  std::vector<std::uint32_t> connectivity;

  std::size_t size() const { return connectivity.size() / static_cast<std::size_t>(node_count(type)); }
  std::span<const std::uint32_t> element(std::size_t i) const {
    const auto n = static_cast<std::size_t>(node_count(type));
    return {connectivity.data() + i * n, n};
  }
  bool operator==(const ElementBlock&) const = default;
};

struct Region {
  std::string name;
  std::vector<ElementBlock> blocks;
  bool operator==(const Region&) const = default;
};

/// A single element as seen through its region: type plus node indices.
struct ElementRef {
  ElementType type;
  std::span<const std::uint32_t> nodes;
};

struct BoundingBox {
  Vec3 lo = Vec3::Constant(0.0);
  Vec3 hi = Vec3::Constant(0.0);

  double diagonal() const { return (hi - lo).norm(); }
  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
  }
};

/// Immutable unstructured mesh: node coordinates (xyz interleaved) and named
/// regions of typed element blocks. Regions are addressed either by name or
/// by their position in regions().
class Mesh {
 public:
  Mesh() = default;
  /// Validates connectivity ranges, block sizes and region-name uniqueness;
  /// throws ValidationError on violation.
  Mesh(std::vector<double> coordinates, std::vector<Region> regions);

  std::size_t node_count() const { return coords_.size() / 3; }
  Vec3 node(std::size_t i) const { return {coords_[3 * i], coords_[3 * i + 1], coords_[3 * i + 2]}; }
  std::span<const double> coordinates() const { return coords_; }

  std::span<const Region> regions() const { return regions_; }
  std::size_t region_count() const { return regions_.size(); }
  std::optional<std::size_t> find_region(std::string_view name) const;
  /// Throws ValidationError naming the region when absent.
  std::size_t region_index(std::string_view name) const;

  std::size_t element_count(std::size_t region) const { return info_[region].element_offsets.back(); }
  std::size_t total_element_count() const;
  ElementRef element(std::size_t region, std::size_t elem) const;

  /// Sorted, unique node indices referenced by the region's elements. NODE
  /// fields on a region store one entry per element of this list.
  std::span<const std::uint32_t> region_nodes(std::size_t region) const { return info_[region].nodes; }
  /// Position of a global node in region_nodes(region), if present.
  std::optional<std::size_t> local_node(std::size_t region, std::uint32_t global) const;

  /// 2 when every element is a surface element, 3 otherwise.
  int dimension() const { return dimension_; }
  int region_dimension(std::size_t region) const { return info_[region].dimension; }

  const BoundingBox& bounding_box() const { return bbox_; }
  double diameter() const { return bbox_.diagonal(); }

  Vec3 centroid(std::size_t region, std::size_t elem) const;
  /// Volume (3D types) or area (2D types). Throws ValidationError naming
  /// region and element if a 3D element is inverted.
  double measure(std::size_t region, std::size_t elem) const;

  /// True if node coordinates agree within `tol` and regions have identical
  /// element blocks.
  bool same_geometry(const Mesh& other, double tol) const;

 private:
  struct RegionInfo {
    std::vector<std::size_t> element_offsets;  // prefix sums over blocks
    std::vector<std::uint32_t> nodes;
    int dimension = 3;
  };

  std::vector<double> coords_;
  std::vector<Region> regions_;
  std::vector<RegionInfo> info_;
  BoundingBox bbox_;
  int dimension_ = 3;
};

/// Arithmetic mean of the element's node coordinates.
Vec3 element_centroid(const Mesh& mesh, std::string_view region, std::size_t elem);

/// Element volume or area; see Mesh::measure.
double element_measure(const Mesh& mesh, std::string_view region, std::size_t elem);

/// Signed volume of the tetrahedron (a, b, c, d).
double tetra_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

}  // namespace fieldpipe
