#include "fieldpipe/aeroacoustic.hpp"
#include "fieldpipe/error.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace fieldpipe;
using namespace fieldpipe::test;

namespace {

const std::vector<std::string> kVolume = {"volume"};

RbfFdSettings settings() {
  RbfFdSettings s;
  s.epsilon_scaling = 0.5;
  return s;
}

Mesh cube(std::size_t n) { return hex_grid(linspace(0, 1, n), linspace(0, 1, n), linspace(0, 1, n)); }

FieldStep rotation(const Mesh& mesh) {
  return node_step(mesh, kVolume, "u", 3, [](const Vec3& x) { return std::array<double, 3>{-x.y(), x.x(), 0.0}; });
}

bool interior(const Vec3& p) { return (p.array() > 0.25).all() && (p.array() < 0.75).all(); }

}  // namespace

TEST_SUITE("aeroacoustic") {

TEST_CASE("cross product is pointwise") {
  const std::vector<double> a = {1, 0, 0, 0, 2, 0};
  const std::vector<double> b = {0, 1, 0, 0, 0, 3};
  CHECK(cross(a, b) == std::vector<double>{0, 0, 1, 6, 0, 0});
}

TEST_CASE("Lamb vector of a solid-body rotation") {
  const auto mesh = cube(8);
  const AeroacousticSourceFilter f(AeroSource::LambVector, mesh, kVolume, mesh, kVolume, settings());
  const auto out = f.apply(rotation(mesh), nullptr, "L");
  CHECK(out.quantity.components == 3);
  const auto nodes = mesh.region_nodes(0);
  // w = (0, 0, 2), so L = w x u = (-2x, -2y, 0).
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto x = mesh.node(nodes[i]);
    CHECK(out.values[0][3 * i] == doctest::Approx(-2.0 * x.x()).epsilon(1e-6).scale(1.0));
    CHECK(out.values[0][3 * i + 1] == doctest::Approx(-2.0 * x.y()).epsilon(1e-6).scale(1.0));
    CHECK(std::abs(out.values[0][3 * i + 2]) < 1e-6);
  }
}

TEST_CASE("Lighthill terms of a solid-body rotation") {
  const auto mesh = cube(10);
  // Quadratic kinetic energy needs a flat basis for second-order accuracy.
  RbfFdSettings flat;
  flat.epsilon_scaling = 0.02;
  const AeroacousticSourceFilter vec(AeroSource::LighthillVector, mesh, kVolume, mesh, kVolume, flat);
  const AeroacousticSourceFilter sca(AeroSource::LighthillScalar, mesh, kVolume, mesh, kVolume, flat);
  const auto u = rotation(mesh);
  const auto v = vec.apply(u, nullptr, "T");
  const auto s = sca.apply(u, nullptr, "t");
  CHECK(s.quantity.components == 1);
  const auto nodes = mesh.region_nodes(0);
  // grad(|u|^2 / 2) = (x, y, 0) and L = (-2x, -2y, 0): the sum is (-x, -y, 0)
  // with divergence -2.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto x = mesh.node(nodes[i]);
    if (!interior(x)) continue;
    CHECK(v.values[0][3 * i] == doctest::Approx(-x.x()).epsilon(1e-3).scale(1.0));
    CHECK(v.values[0][3 * i + 1] == doctest::Approx(-x.y()).epsilon(1e-3).scale(1.0));
    CHECK(std::abs(v.values[0][3 * i + 2]) < 1e-3);
    CHECK(s.values[0][i] == doctest::Approx(-2.0).epsilon(1e-3));
  }
}

TEST_CASE("uniform flow has no sources") {
  const auto mesh = cube(6);
  const auto u = node_step(mesh, kVolume, "u", 3, [](const Vec3&) { return std::array<double, 3>{3.0, -1.0, 0.5}; });
  for (const auto kind : {AeroSource::LambVector, AeroSource::LighthillVector, AeroSource::LighthillScalar}) {
    const AeroacousticSourceFilter f(kind, mesh, kVolume, mesh, kVolume, settings());
    const auto out = f.apply(u, nullptr, "o");
    for (const double v : out.values[0]) CHECK(std::abs(v) < 1e-8);
  }
}

TEST_CASE("the Lamb vector is orthogonal to velocity and vorticity") {
  const auto mesh = tet_grid(linspace(0, 1, 6), linspace(0, 1, 6), linspace(0, 1, 6), "volume", 0.25, 7);
  const auto u = node_step(mesh, kVolume, "u", 3, [](const Vec3& x) {
    return std::array<double, 3>{std::sin(x.y()), x.z() * x.x(), std::cos(2.0 * x.x())};
  });
  const auto w = node_step(mesh, kVolume, "w", 3, [](const Vec3& x) {
    return std::array<double, 3>{1.0 + x.x(), -x.y() * x.z(), 0.3};
  });
  const AeroacousticSourceFilter f(AeroSource::LambVector, mesh, kVolume, mesh, kVolume, settings());
  const auto l = f.lamb_vector(u, &w);
  // Targets coincide with sources, so u and w arrive unchanged.
  const auto uu = u.values[0];
  const auto ww = w.values[0];
  for (std::size_t i = 0; i < l.size(); i += 3) {
    const double lu = l[i] * uu[i] + l[i + 1] * uu[i + 1] + l[i + 2] * uu[i + 2];
    const double lw = l[i] * ww[i] + l[i + 1] * ww[i + 1] + l[i + 2] * ww[i + 2];
    CHECK(std::abs(lu) < 1e-12);
    CHECK(std::abs(lw) < 1e-12);
  }
}

TEST_CASE("the scalar source is the divergence of the vector source") {
  const auto source = cube(7);
  const auto target = tet_grid(linspace(0.1, 0.9, 5), linspace(0.1, 0.9, 5), linspace(0.1, 0.9, 5));
  const auto u = node_step(source, kVolume, "u", 3, [](const Vec3& x) {
    return std::array<double, 3>{x.y() * x.y(), std::sin(x.x()), x.x() * x.z()};
  });
  const AeroacousticSourceFilter vec(AeroSource::LighthillVector, source, kVolume, target, kVolume, settings());
  const AeroacousticSourceFilter sca(AeroSource::LighthillScalar, source, kVolume, target, kVolume, settings());
  const auto& pts = vec.differentiator().targets().points;
  const auto ops = build_derivative_operators(pts, pts, settings(), 3, 1e-12 * target.diameter());
  const auto want = ops.divergence(vec.lighthill_vector(u, nullptr));
  const auto got = sca.apply(u, nullptr, "s");
  const auto dense = gather(sca.differentiator().targets(), got);
  REQUIRE(dense.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(dense[i] == want[i]);
  // The Lighthill vector is the gradient of u.u / 2 plus the Lamb vector.
  const auto lamb = vec.lamb_vector(u, nullptr);
  const auto lh = vec.lighthill_vector(u, nullptr);
  const auto& src = vec.differentiator().sources();
  const auto us = gather(src, u);
  std::vector<double> k(src.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = 0.5 * (us[3 * i] * us[3 * i] + us[3 * i + 1] * us[3 * i + 1] + us[3 * i + 2] * us[3 * i + 2]);
  const auto g = vec.differentiator().operators().gradient(k);
  for (std::size_t i = 0; i < lh.size(); ++i) CHECK(lh[i] == g[i] + lamb[i]);
}

TEST_CASE("source filters reject non-velocity input") {
  const auto mesh = cube(5);
  const AeroacousticSourceFilter f(AeroSource::LambVector, mesh, kVolume, mesh, kVolume, settings());
  const auto s = node_step(mesh, kVolume, "s", 1, [](const Vec3& x) { return std::array<double, 3>{x.x(), 0, 0}; });
  CHECK_THROWS_AS(f.apply(s, nullptr, "L"), ValidationError);
  auto freq = rotation(mesh);
  freq.quantity.domain = AnalysisDomain::Frequency;
  CHECK_THROWS_AS(f.apply(freq, nullptr, "L"), ValidationError);
  const auto cells = cell_step(mesh, kVolume, "u", 3, [](const Vec3&) { return std::array<double, 3>{1, 1, 1}; });
  CHECK_THROWS_AS(f.apply(cells, nullptr, "L"), ValidationError);
}

TEST_CASE("smooth derivative is exact for quadratics") {
  const double dt = 0.01;
  for (const double t : {0.0, 0.37, 5.0}) {
    auto q = [](double s) { return 1.5 - 2.0 * s + 0.75 * s * s; };
    const std::vector<double> a = {q(t - 2 * dt)}, b = {q(t - dt)}, c = {q(t + dt)}, d = {q(t + 2 * dt)};
    CHECK(smooth_derivative(a, b, c, d, dt)[0] == doctest::Approx(-2.0 + 1.5 * t).epsilon(1e-9));
  }
}

TEST_CASE("the time derivative window emits the centre step") {
  const auto mesh = cube(3);
  TimeDerivative td("dp");
  const double dt = 2e-5;
  for (std::size_t j = 0; j < 9; ++j) {
    const double t = 1e-5 + static_cast<double>(j) * dt;
    auto step = node_step(mesh, kVolume, "p", 1, [t](const Vec3& x) {
      return std::array<double, 3>{x.x() + 4e4 * t + 1e8 * t * t, 0, 0};
    }, j, t);
    const auto out = td.push(step);
    if (j < 4) {
      CHECK_FALSE(out.has_value());
      continue;
    }
    REQUIRE(out.has_value());
    CHECK(out->step_index == j - 2);
    const double centre = 1e-5 + static_cast<double>(j - 2) * dt;
    CHECK(out->step_value == doctest::Approx(centre).epsilon(1e-14));
    CHECK(out->quantity.name == "dp");
    for (const double v : out->values[0]) CHECK(v == doctest::Approx(4e4 + 2e8 * centre).epsilon(1e-7));
  }
}

TEST_CASE("the time derivative rejects unusable sequences") {
  const auto mesh = cube(3);
  auto make = [&](std::size_t j, double t) {
    return node_step(mesh, kVolume, "p", 1, [](const Vec3&) { return std::array<double, 3>{1, 0, 0}; }, j, t);
  };
  TimeDerivative freq("d");
  auto f = make(0, 0.0);
  f.quantity.domain = AnalysisDomain::Frequency;
  CHECK_THROWS_AS(freq.push(f), ValidationError);

  TimeDerivative uneven("d");
  for (std::size_t j = 0; j < 4; ++j) uneven.push(make(j, static_cast<double>(j)));
  CHECK_THROWS_WITH_AS(uneven.push(make(4, 4.5)), doctest::Contains("non-uniform"), ValidationError);

  TimeDerivative shape("d");
  shape.push(make(0, 0.0));
  auto v = node_step(mesh, kVolume, "p", 3, [](const Vec3&) { return std::array<double, 3>{1, 1, 1}; }, 1, 1.0);
  CHECK_THROWS_AS(shape.push(v), ValidationError);

  TimeDerivative backwards("d");
  backwards.push(make(0, 1.0));
  CHECK_THROWS_AS(backwards.push(make(1, 1.0)), ValidationError);
}

}  // TEST_SUITE
