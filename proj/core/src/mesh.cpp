#include "fieldpipe/mesh.hpp"

#include "fieldpipe/error.hpp"

#include <algorithm>
#include <Eigen/Geometry>

#include <cmath>
#include <set>
#include <string>

namespace fieldpipe {

double tetra_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

Mesh::Mesh(std::vector<double> coordinates, std::vector<Region> regions)
    : coords_(std::move(coordinates)), regions_(std::move(regions)) {
  if (coords_.size() % 3 != 0) {
    throw ValidationError("mesh coordinate array length " + std::to_string(coords_.size()) +
                          " is not a multiple of 3");
  }
  std::set<std::string> names;
  const auto n_nodes = node_count();
  bool any_volume = false;
  info_.reserve(regions_.size());
  for (const auto& r : regions_) {
    if (r.name.empty()) throw ValidationError("mesh region with empty name");
    if (!names.insert(r.name).second) throw ValidationError("duplicate region name '" + r.name + "'");
    RegionInfo info;
    info.element_offsets.push_back(0);
    info.dimension = 2;
    std::vector<std::uint32_t> nodes;
    for (std::size_t b = 0; b < r.blocks.size(); ++b) {
      const auto& block = r.blocks[b];
      const auto npe = static_cast<std::size_t>(fieldpipe::node_count(block.type));
      if (block.connectivity.size() % npe != 0) {
        throw ValidationError("region '" + r.name + "' block " + std::to_string(b) +
                              ": connectivity length " + std::to_string(block.connectivity.size()) +
                              " is not a multiple of " + std::to_string(npe));
      }
      for (auto idx : block.connectivity) {
        if (idx >= n_nodes) {
          throw ValidationError("region '" + r.name + "' block " + std::to_string(b) +
                                ": node index " + std::to_string(idx) + " out of range (" +
                                std::to_string(n_nodes) + " nodes)");
        }
      }
      if (fieldpipe::dimension(block.type) == 3) info.dimension = 3;
      nodes.insert(nodes.end(), block.connectivity.begin(), block.connectivity.end());
      info.element_offsets.push_back(info.element_offsets.back() + block.size());
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    info.nodes = std::move(nodes);
    any_volume = any_volume || info.dimension == 3;
    info_.push_back(std::move(info));
  }
  dimension_ = any_volume ? 3 : 2;

  if (n_nodes > 0) {
    bbox_.lo = node(0);
    bbox_.hi = node(0);
    for (std::size_t i = 1; i < n_nodes; ++i) {
      const Vec3 p = node(i);
      bbox_.lo = bbox_.lo.cwiseMin(p);
      bbox_.hi = bbox_.hi.cwiseMax(p);
    }
  }
}

std::optional<std::size_t> Mesh::find_region(std::string_view name) const {
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    if (regions_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Mesh::region_index(std::string_view name) const {
  if (auto i = find_region(name)) return *i;
  std::string known;
  for (const auto& r : regions_) known += (known.empty() ? "" : ", ") + r.name;
  throw ValidationError("unknown region '" + std::string(name) + "' (mesh regions: " + known + ")");
}

std::size_t Mesh::total_element_count() const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < regions_.size(); ++r) n += element_count(r);
  return n;
}

ElementRef Mesh::element(std::size_t region, std::size_t elem) const {
  if (region >= regions_.size()) {
    throw ValidationError("region index " + std::to_string(region) + " out of range");
  }
  const auto& offsets = info_[region].element_offsets;
  if (elem >= offsets.back()) {
    throw ValidationError("element " + std::to_string(elem) + " out of range in region '" +
                          regions_[region].name + "' (" + std::to_string(offsets.back()) +
                          " elements)");
  }
  const auto it = std::upper_bound(offsets.begin(), offsets.end(), elem);
  const auto b = static_cast<std::size_t>(it - offsets.begin()) - 1;
  const auto& block = regions_[region].blocks[b];
  return {block.type, block.element(elem - offsets[b])};
}

std::optional<std::size_t> Mesh::local_node(std::size_t region, std::uint32_t global) const {
  const auto& nodes = info_[region].nodes;
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), global);
  if (it == nodes.end() || *it != global) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

Vec3 Mesh::centroid(std::size_t region, std::size_t elem) const {
  const auto e = element(region, elem);
  Vec3 c = Vec3::Zero();
  for (auto n : e.nodes) c += node(n);
  return c / static_cast<double>(e.nodes.size());
}

double Mesh::measure(std::size_t region, std::size_t elem) const {
  const auto e = element(region, elem);
  double m = 0.0;
  if (fieldpipe::dimension(e.type) == 3) {
    for (const auto& t : sub_tetrahedra(e.type)) {
      m += tetra_volume(node(e.nodes[static_cast<std::size_t>(t[0])]),
                        node(e.nodes[static_cast<std::size_t>(t[1])]),
                        node(e.nodes[static_cast<std::size_t>(t[2])]),
                        node(e.nodes[static_cast<std::size_t>(t[3])]));
    }
    if (m < 0.0) {
      throw ValidationError("inverted element " + std::to_string(elem) + " in region '" +
                            regions_[region].name + "' (volume " + std::to_string(m) + ")");
    }
  } else {
    // Surface elements carry no orientation in 3D space; area is unsigned.
    for (const auto& t : sub_triangles(e.type)) {
      const Vec3 a = node(e.nodes[static_cast<std::size_t>(t[0])]);
      const Vec3 b = node(e.nodes[static_cast<std::size_t>(t[1])]);
      const Vec3 c = node(e.nodes[static_cast<std::size_t>(t[2])]);
      m += 0.5 * (b - a).cross(c - a).norm();
    }
  }
  return m;
}

bool Mesh::same_geometry(const Mesh& other, double tol) const {
  if (node_count() != other.node_count() || regions_ != other.regions_) return false;
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (std::abs(coords_[i] - other.coords_[i]) > tol) return false;
  }
  return true;
}

Vec3 element_centroid(const Mesh& mesh, std::string_view region, std::size_t elem) {
  return mesh.centroid(mesh.region_index(region), elem);
}

double element_measure(const Mesh& mesh, std::string_view region, std::size_t elem) {
  return mesh.measure(mesh.region_index(region), elem);
}

}  // namespace fieldpipe
