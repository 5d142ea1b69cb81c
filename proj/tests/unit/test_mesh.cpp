#include "fieldpipe/error.hpp"
#include "fieldpipe/mesh.hpp"
#include "fieldpipe/point_locator.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace fieldpipe;
using namespace fieldpipe::test;

TEST_SUITE("mesh") {

TEST_CASE("unit elements have the expected measures and centroids") {
  const Mesh tet({0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1}, {Region{"t", {{ElementType::Tetra4, {0, 1, 2, 3}}}}});
  CHECK(tet.measure(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK((tet.centroid(0, 0) - Vec3(0.25, 0.25, 0.25)).norm() < 1e-15);

  const auto cube = hex_grid({0, 1}, {0, 1}, {0, 1});
  CHECK(cube.measure(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cube.dimension() == 3);
  CHECK(cube.diameter() == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("region node lists are the sorted unique referenced nodes") {
  const Mesh m({0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 9, 9, 9, 1, 1, 1},
               {Region{"a", {{ElementType::Tetra4, {3, 1, 0, 2}}}},
                Region{"b", {{ElementType::Tria3, {5, 1, 2}}}}});
  const auto a = m.region_nodes(0);
  CHECK(std::vector<std::uint32_t>(a.begin(), a.end()) == std::vector<std::uint32_t>{0, 1, 2, 3});
  const auto b = m.region_nodes(1);
  CHECK(std::vector<std::uint32_t>(b.begin(), b.end()) == std::vector<std::uint32_t>{1, 2, 5});
  CHECK(m.local_node(1, 5) == std::optional<std::size_t>(2));
  CHECK_FALSE(m.local_node(1, 4).has_value());
  CHECK(m.region_dimension(1) == 2);
}

TEST_CASE("invalid meshes are rejected") {
  CHECK_THROWS_AS(Mesh({0, 0, 0}, {Region{"a", {{ElementType::Tria3, {0, 0, 1}}}}}), ValidationError);
  CHECK_THROWS_AS(Mesh({0, 0, 0, 1, 0, 0, 0, 1, 0},
                       {Region{"a", {{ElementType::Tria3, {0, 1, 2}}}}, Region{"a", {{ElementType::Tria3, {0, 1, 2}}}}}),
                  ValidationError);
  CHECK_THROWS_AS(Mesh({0, 0, 0, 1, 0, 0, 0, 1, 0}, {Region{"a", {{ElementType::Tria3, {0, 1}}}}}), ValidationError);
  const Mesh inverted({0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1}, {Region{"t", {{ElementType::Tetra4, {0, 2, 1, 3}}}}});
  CHECK_THROWS_AS(inverted.measure(0, 0), ValidationError);
  CHECK_THROWS_AS(inverted.region_index("missing"), ValidationError);
}

TEST_CASE("shape functions form a partition of unity with the Kronecker property") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto t : kAllElementTypes) {
    const int n = node_count(t);
    for (int i = 0; i < n; ++i) {
      const auto s = shape_values(t, reference_node(t, i));
      for (int j = 0; j < n; ++j) CHECK(s[j] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-14));
    }
    for (int trial = 0; trial < 50; ++trial) {
      // Convex combination of reference nodes stays inside the element.
      std::vector<double> w(static_cast<std::size_t>(n));
      double total = 0.0;
      for (auto& x : w) total += (x = u(rng));
      Vec3 p = Vec3::Zero();
      for (int i = 0; i < n; ++i) p += w[static_cast<std::size_t>(i)] / total * reference_node(t, i);
      const auto s = shape_values(t, p);
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += s[i];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("element inversion round-trips through the physical map") {
  const auto mesh = tet_grid(linspace(0, 1, 3), linspace(0, 2, 3), linspace(0, 1, 3), "v", 0.15, 3);
  const auto hexes = hex_grid({0.0, 0.3, 1.0}, {0.0, 0.5, 1.2}, {0.0, 0.7});
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (const Mesh* m : {&mesh, &hexes}) {
    for (std::size_t e = 0; e < m->element_count(0); ++e) {
      const auto ref = m->element(0, e);
      for (int trial = 0; trial < 5; ++trial) {
        const int n = node_count(ref.type);
        std::vector<double> w(static_cast<std::size_t>(n));
        double total = 0.0;
        for (auto& x : w) total += (x = u(rng));
        Vec3 local = Vec3::Zero();
        for (int i = 0; i < n; ++i) local += w[static_cast<std::size_t>(i)] / total * reference_node(ref.type, i);
        const Vec3 p = map_to_physical(*m, ref, local);
        const auto back = invert_element(*m, ref, p);
        REQUIRE(back.has_value());
        CHECK((map_to_physical(*m, ref, *back) - p).norm() < 1e-10);
      }
    }
  }
}

TEST_CASE("jittered tetrahedral grids fill their box exactly") {
  for (std::uint32_t seed = 1; seed <= 5; ++seed) {
    const auto m = tet_grid(linspace(0, 1, 4), linspace(0, 1, 5), linspace(0, 2, 4), "v", 0.2, seed);
    double total = 0.0;
    for (std::size_t e = 0; e < m.element_count(0); ++e) {
      const double v = m.measure(0, e);
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("point location finds the containing element") {
  const auto m = tet_grid(linspace(0, 1, 4), linspace(0, 1, 4), linspace(0, 1, 4), "v", 0.1, 5);
  const PointLocator loc(m, {0});
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const auto hit = loc.locate(p);
    REQUIRE(hit.has_value());
    const auto ref = m.element(hit->region, hit->elem);
    CHECK(reference_contains(ref.type, hit->local, 1e-8));
    CHECK((map_to_physical(m, ref, hit->local) - p).norm() < 1e-10);
  }
  CHECK_FALSE(loc.locate(Vec3(2, 2, 2)).has_value());
}

}  // TEST_SUITE
