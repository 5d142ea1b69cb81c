#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace fieldpipe {

using Vec3 = Eigen::Vector3d;

/// First-order element types. Node orderings follow the Ensight/VTK
/// convention: QUAD4 and the bottom face of HEXA8 counter-clockwise, PENTA6
/// bottom triangle then top triangle, PYRAMID5 base quad then apex.
enum class ElementType : std::uint8_t { Tria3, Quad4, Tetra4, Hexa8, Penta6, Pyramid5 };

inline constexpr std::array<ElementType, 6> kAllElementTypes = {
    ElementType::Tria3, ElementType::Quad4,  ElementType::Tetra4,
    ElementType::Hexa8, ElementType::Penta6, ElementType::Pyramid5};

inline constexpr int kMaxElementNodes = 8;

constexpr int node_count(ElementType t) {
  switch (t) {
    case ElementType::Tria3: return 3;
    case ElementType::Quad4: return 4;
    case ElementType::Tetra4: return 4;
    case ElementType::Hexa8: return 8;
    case ElementType::Penta6: return 6;
    case ElementType::Pyramid5: return 5;
  }
  return 0;
}

constexpr int dimension(ElementType t) {
  return (t == ElementType::Tria3 || t == ElementType::Quad4) ? 2 : 3;
}

/// Upper-case name used in the native container ("TETRA4", ...).
std::string_view to_string(ElementType t);
std::optional<ElementType> element_type_from_string(std::string_view name);

/// Shape function values at one reference point; only the first
/// node_count(type) entries are meaningful.
struct ShapeValues {
  std::array<double, kMaxElementNodes> w{};
  int n = 0;

  std::span<const double> values() const { return {w.data(), static_cast<std::size_t>(n)}; }
  double operator[](int i) const { return w[static_cast<std::size_t>(i)]; }
};

/// Reference-space derivatives dN_i/d(xi, eta, zeta). 2D types leave the
/// zeta column at zero.
struct ShapeGradients {
  std::array<Vec3, kMaxElementNodes> d{};
  int n = 0;
};

/// Reference-element tolerance used by shape_values().
inline constexpr double kReferenceTolerance = 1e-10;

/// First-order Lagrange shape functions. Throws std::invalid_argument when
/// the point lies outside the reference element by more than
/// kReferenceTolerance.
ShapeValues shape_values(ElementType t, const Vec3& local);

/// Same as shape_values() without the containment check; used by Newton
/// iterations that may step outside the element.
ShapeValues shape_values_unchecked(ElementType t, const Vec3& local);

ShapeGradients shape_gradients(ElementType t, const Vec3& local);

/// True when `local` lies inside the reference element within `tol`.
bool reference_contains(ElementType t, const Vec3& local, double tol);

/// Reference coordinates of node i.
Vec3 reference_node(ElementType t, int i);

/// Reference point with equal (or, for the pyramid, representative) weights.
Vec3 reference_center(ElementType t);

/// Decomposition of a 3D element into positively oriented tetrahedra,
/// expressed as local node indices. Empty for 2D types.
std::span<const std::array<int, 4>> sub_tetrahedra(ElementType t);

/// Decomposition of a 2D element into triangles. Empty for 3D types.
std::span<const std::array<int, 3>> sub_triangles(ElementType t);

}  // namespace fieldpipe
