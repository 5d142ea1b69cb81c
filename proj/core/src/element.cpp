#include "fieldpipe/element.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fieldpipe {

namespace {

constexpr std::array<std::array<double, 3>, 4> kQuadRef = {{
    {-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}}};

constexpr std::array<std::array<double, 3>, 8> kHexRef = {{
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
    {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}}};

constexpr std::array<std::array<double, 3>, 3> kTriRef = {{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}};

constexpr std::array<std::array<double, 3>, 4> kTetRef = {{
    {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

constexpr std::array<std::array<double, 3>, 6> kWedgeRef = {{
    {0, 0, -1}, {1, 0, -1}, {0, 1, -1}, {0, 0, 1}, {1, 0, 1}, {0, 1, 1}}};

constexpr std::array<std::array<double, 3>, 5> kPyramidRef = {{
    {-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}, {0, 0, 1}}};

constexpr std::array<std::array<int, 4>, 1> kTetSplit = {{{0, 1, 2, 3}}};
constexpr std::array<std::array<int, 4>, 6> kHexSplit = {{
    {0, 1, 2, 6}, {0, 2, 3, 6}, {0, 3, 7, 6}, {0, 7, 4, 6}, {0, 4, 5, 6}, {0, 5, 1, 6}}};
constexpr std::array<std::array<int, 4>, 3> kWedgeSplit = {{{0, 1, 2, 3}, {1, 2, 3, 4}, {2, 3, 4, 5}}};
constexpr std::array<std::array<int, 4>, 2> kPyramidSplit = {{{0, 1, 2, 4}, {0, 2, 3, 4}}};

constexpr std::array<std::array<int, 3>, 1> kTriSplit = {{{0, 1, 2}}};
constexpr std::array<std::array<int, 3>, 2> kQuadSplit = {{{0, 1, 2}, {0, 2, 3}}};

// Below this height the pyramid apex is treated as a point to avoid 0/0.
constexpr double kApexGuard = 1e-14;

}  // namespace

std::string_view to_string(ElementType t) {
  switch (t) {
    case ElementType::Tria3: return "TRIA3";
    case ElementType::Quad4: return "QUAD4";
    case ElementType::Tetra4: return "TETRA4";
    case ElementType::Hexa8: return "HEXA8";
    case ElementType::Penta6: return "PENTA6";
    case ElementType::Pyramid5: return "PYRAMID5";
  }
  return "UNKNOWN";
}

std::optional<ElementType> element_type_from_string(std::string_view name) {
  for (auto t : kAllElementTypes) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

Vec3 reference_node(ElementType t, int i) {
  auto pick = [i](const auto& table) {
    const auto& r = table.at(static_cast<std::size_t>(i));
    return Vec3(r[0], r[1], r[2]);
  };
  switch (t) {
    case ElementType::Tria3: return pick(kTriRef);
    case ElementType::Quad4: return pick(kQuadRef);
    case ElementType::Tetra4: return pick(kTetRef);
    case ElementType::Hexa8: return pick(kHexRef);
    case ElementType::Penta6: return pick(kWedgeRef);
    case ElementType::Pyramid5: return pick(kPyramidRef);
  }
  throw std::invalid_argument("unsupported element type");
}

Vec3 reference_center(ElementType t) {
  switch (t) {
    case ElementType::Tria3: return {1.0 / 3.0, 1.0 / 3.0, 0.0};
    case ElementType::Quad4: return {0.0, 0.0, 0.0};
    case ElementType::Tetra4: return {0.25, 0.25, 0.25};
    case ElementType::Hexa8: return {0.0, 0.0, 0.0};
    case ElementType::Penta6: return {1.0 / 3.0, 1.0 / 3.0, 0.0};
    case ElementType::Pyramid5: return {0.0, 0.0, 0.2};
  }
  throw std::invalid_argument("unsupported element type");
}

bool reference_contains(ElementType t, const Vec3& p, double tol) {
  const double x = p.x(), y = p.y(), z = p.z();
  switch (t) {
    case ElementType::Tria3:
      return x >= -tol && y >= -tol && 1.0 - x - y >= -tol && std::abs(z) <= tol;
    case ElementType::Quad4:
      return std::abs(x) <= 1.0 + tol && std::abs(y) <= 1.0 + tol && std::abs(z) <= tol;
    case ElementType::Tetra4:
      return x >= -tol && y >= -tol && z >= -tol && 1.0 - x - y - z >= -tol;
    case ElementType::Hexa8:
      return std::abs(x) <= 1.0 + tol && std::abs(y) <= 1.0 + tol && std::abs(z) <= 1.0 + tol;
    case ElementType::Penta6:
      return x >= -tol && y >= -tol && 1.0 - x - y >= -tol && std::abs(z) <= 1.0 + tol;
    case ElementType::Pyramid5: {
      const double half = 1.0 - z;
      return z >= -tol && z <= 1.0 + tol && std::abs(x) <= half + tol && std::abs(y) <= half + tol;
    }
  }
  return false;
}

ShapeValues shape_values_unchecked(ElementType t, const Vec3& p) {
  ShapeValues s;
  s.n = node_count(t);
  const double x = p.x(), y = p.y(), z = p.z();
  switch (t) {
    case ElementType::Tria3:
      s.w[0] = 1.0 - x - y;
      s.w[1] = x;
      s.w[2] = y;
      break;
    case ElementType::Quad4:
      for (int i = 0; i < 4; ++i) {
        const auto& r = kQuadRef[static_cast<std::size_t>(i)];
        s.w[static_cast<std::size_t>(i)] = 0.25 * (1.0 + r[0] * x) * (1.0 + r[1] * y);
      }
      break;
    case ElementType::Tetra4:
      s.w[0] = 1.0 - x - y - z;
      s.w[1] = x;
      s.w[2] = y;
      s.w[3] = z;
      break;
    case ElementType::Hexa8:
      for (int i = 0; i < 8; ++i) {
        const auto& r = kHexRef[static_cast<std::size_t>(i)];
        s.w[static_cast<std::size_t>(i)] =
            0.125 * (1.0 + r[0] * x) * (1.0 + r[1] * y) * (1.0 + r[2] * z);
      }
      break;
    case ElementType::Penta6: {
      const double l[3] = {1.0 - x - y, x, y};
      for (int i = 0; i < 3; ++i) {
        s.w[static_cast<std::size_t>(i)] = l[i] * 0.5 * (1.0 - z);
        s.w[static_cast<std::size_t>(i + 3)] = l[i] * 0.5 * (1.0 + z);
      }
      break;
    }
    case ElementType::Pyramid5: {
      const double h = 1.0 - z;
      if (std::abs(h) < kApexGuard) {
        s.w = {};
        s.w[4] = 1.0;
        break;
      }
      for (int i = 0; i < 4; ++i) {
        const auto& r = kPyramidRef[static_cast<std::size_t>(i)];
        s.w[static_cast<std::size_t>(i)] = (h + r[0] * x) * (h + r[1] * y) / (4.0 * h);
      }
      s.w[4] = z;
      break;
    }
  }
  return s;
}

ShapeValues shape_values(ElementType t, const Vec3& local) {
  if (!reference_contains(t, local, kReferenceTolerance)) {
    throw std::invalid_argument("reference point outside " + std::string(to_string(t)) +
                                " reference element");
  }
  return shape_values_unchecked(t, local);
}

ShapeGradients shape_gradients(ElementType t, const Vec3& p) {
  ShapeGradients g;
  g.n = node_count(t);
  const double x = p.x(), y = p.y(), z = p.z();
  switch (t) {
    case ElementType::Tria3:
      g.d[0] = {-1, -1, 0};
      g.d[1] = {1, 0, 0};
      g.d[2] = {0, 1, 0};
      break;
    case ElementType::Quad4:
      for (int i = 0; i < 4; ++i) {
        const auto& r = kQuadRef[static_cast<std::size_t>(i)];
        g.d[static_cast<std::size_t>(i)] = {0.25 * r[0] * (1.0 + r[1] * y),
                                            0.25 * r[1] * (1.0 + r[0] * x), 0.0};
      }
      break;
    case ElementType::Tetra4:
      g.d[0] = {-1, -1, -1};
      g.d[1] = {1, 0, 0};
      g.d[2] = {0, 1, 0};
      g.d[3] = {0, 0, 1};
      break;
    case ElementType::Hexa8:
      for (int i = 0; i < 8; ++i) {
        const auto& r = kHexRef[static_cast<std::size_t>(i)];
        const double a = 1.0 + r[0] * x, b = 1.0 + r[1] * y, c = 1.0 + r[2] * z;
        g.d[static_cast<std::size_t>(i)] = {0.125 * r[0] * b * c, 0.125 * r[1] * a * c,
                                            0.125 * r[2] * a * b};
      }
      break;
    case ElementType::Penta6: {
      const double l[3] = {1.0 - x - y, x, y};
      const Vec3 dl[3] = {{-1, -1, 0}, {1, 0, 0}, {0, 1, 0}};
      for (int i = 0; i < 3; ++i) {
        Vec3 lo = dl[i] * 0.5 * (1.0 - z);
        lo.z() = -0.5 * l[i];
        Vec3 hi = dl[i] * 0.5 * (1.0 + z);
        hi.z() = 0.5 * l[i];
        g.d[static_cast<std::size_t>(i)] = lo;
        g.d[static_cast<std::size_t>(i + 3)] = hi;
      }
      break;
    }
    case ElementType::Pyramid5: {
      double h = 1.0 - z;
      if (std::abs(h) < kApexGuard) h = kApexGuard;
      for (int i = 0; i < 4; ++i) {
        const auto& r = kPyramidRef[static_cast<std::size_t>(i)];
        const double a = h + r[0] * x, b = h + r[1] * y;
        g.d[static_cast<std::size_t>(i)] = {r[0] * b / (4.0 * h), r[1] * a / (4.0 * h),
                                            (-(a + b) / h + a * b / (h * h)) / 4.0};
      }
      g.d[4] = {0, 0, 1};
      break;
    }
  }
  return g;
}

std::span<const std::array<int, 4>> sub_tetrahedra(ElementType t) {
  switch (t) {
    case ElementType::Tetra4: return kTetSplit;
    case ElementType::Hexa8: return kHexSplit;
    case ElementType::Penta6: return kWedgeSplit;
    case ElementType::Pyramid5: return kPyramidSplit;
    default: return {};
  }
}

std::span<const std::array<int, 3>> sub_triangles(ElementType t) {
  switch (t) {
    case ElementType::Tria3: return kTriSplit;
    case ElementType::Quad4: return kQuadSplit;
    default: return {};
  }
}

}  // namespace fieldpipe
