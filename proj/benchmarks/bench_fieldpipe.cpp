#include "fieldpipe/conservative_filters.hpp"
#include "fieldpipe/interp_filters.hpp"
#include "fieldpipe/log.hpp"
#include "fieldpipe/rbf_fd.hpp"
#include "fieldpipe/spatial_index.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

namespace {

using namespace fieldpipe;

const std::vector<std::string> kVolume = {"volume"};

// n^3 hexahedra on the unit cube.
Mesh cube(std::size_t n, double offset = 0.0) {
  const std::size_t m = n + 1;
  std::vector<double> coords;
  coords.reserve(3 * m * m * m);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < m; ++i) {
        for (const auto c : {i, j, k}) coords.push_back(offset + static_cast<double>(c) / static_cast<double>(n));
      }
    }
  }
  auto id = [m](std::size_t i, std::size_t j, std::size_t k) { return static_cast<std::uint32_t>((k * m + j) * m + i); };
  ElementBlock block{ElementType::Hexa8, {}};
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        block.connectivity.insert(block.connectivity.end(),
                                  {id(i, j, k), id(i + 1, j, k), id(i + 1, j + 1, k), id(i, j + 1, k),
                                   id(i, j, k + 1), id(i + 1, j, k + 1), id(i + 1, j + 1, k + 1), id(i, j + 1, k + 1)});
      }
    }
  }
  return Mesh(std::move(coords), {Region{"volume", {block}}});
}

FieldStep node_field(const Mesh& mesh, int components) {
  FieldStep s;
  s.quantity = {"f", DefinedOn::Node, components, AnalysisDomain::Time, kVolume};
  const auto nodes = mesh.region_nodes(0);
  std::vector<double> v;
  for (const auto n : nodes) {
    const auto x = mesh.node(n);
    for (int c = 0; c < components; ++c) v.push_back(std::sin(x.x() + c) * x.y() + x.z());
  }
  s.values = {std::move(v)};
  return s;
}

FieldStep cell_field(const Mesh& mesh) {
  FieldStep s;
  s.quantity = {"f", DefinedOn::Cell, 1, AnalysisDomain::Time, kVolume};
  s.values = {std::vector<double>(mesh.element_count(0), 1.5)};
  return s;
}

void BM_PointIndexBuild(benchmark::State& state) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  for (auto _ : state) {
    PointIndex index(pts);
    benchmark::DoNotOptimize(index.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PointIndexBuild)->Range(1 << 10, 1 << 17);

void BM_Knn(benchmark::State& state) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> pts(1 << 16);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  const PointIndex index(pts);
  const auto k = static_cast<std::size_t>(state.range(0));
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.knn(pts[q++ % pts.size()] + Vec3::Constant(1e-3), k));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Knn)->Arg(1)->Arg(8)->Arg(18)->Arg(32);

void BM_RbfFdOperators(benchmark::State& state) {
  const auto mesh = cube(static_cast<std::size_t>(state.range(0)));
  const auto pts = make_point_set(mesh, kVolume, DefinedOn::Node).points;
  RbfFdSettings settings;
  settings.epsilon_scaling = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_derivative_operators(pts, pts, settings, 3, 0.0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}
BENCHMARK(BM_RbfFdOperators)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_GradientApply(benchmark::State& state) {
  const auto mesh = cube(static_cast<std::size_t>(state.range(0)));
  RbfFdSettings settings;
  settings.epsilon_scaling = 0.5;
  const Differentiator diff(mesh, kVolume, mesh, kVolume, settings);
  const auto f = node_field(mesh, 1);
  for (auto _ : state) benchmark::DoNotOptimize(diff.apply(SpatialOperator::Gradient, f, "g"));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.values[0].size()));
}
BENCHMARK(BM_GradientApply)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_ShepardSetup(benchmark::State& state) {
  const auto source = cube(static_cast<std::size_t>(state.range(0)));
  const auto target = cube(static_cast<std::size_t>(state.range(0)) - 1, 0.01);
  for (auto _ : state) {
    ShepardInterpolator op(source, kVolume, target, kVolume, DefinedOn::Node, {});
    benchmark::DoNotOptimize(&op);
  }
}
BENCHMARK(BM_ShepardSetup)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_RbfInterpolatorSetup(benchmark::State& state) {
  const auto source = cube(static_cast<std::size_t>(state.range(0)));
  const auto target = cube(static_cast<std::size_t>(state.range(0)) - 1, 0.01);
  for (auto _ : state) {
    RbfInterpolator op(source, kVolume, target, kVolume, DefinedOn::Node, {});
    benchmark::DoNotOptimize(&op);
  }
}
BENCHMARK(BM_RbfInterpolatorSetup)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_CellToNode(benchmark::State& state) {
  const auto mesh = cube(static_cast<std::size_t>(state.range(0)));
  const auto f = cell_field(mesh);
  for (auto _ : state) benchmark::DoNotOptimize(cell_to_node(f, mesh, kVolume, mesh, kVolume, "n"));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mesh.element_count(0)));
}
BENCHMARK(BM_CellToNode)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_Conservative(benchmark::State& state) {
  const auto source = cube(static_cast<std::size_t>(state.range(0)));
  const auto target = cube(static_cast<std::size_t>(state.range(0)) / 2, 0.013);
  const auto f = cell_field(source);
  const auto variant = state.range(1) == 0 ? ConservativeVariant::CellCentroid : ConservativeVariant::CutCell;
  for (auto _ : state) {
    const ConservativeInterpolator op(source, kVolume, target, kVolume, variant);
    benchmark::DoNotOptimize(op.apply(f, "rhs"));
  }
}
BENCHMARK(BM_Conservative)->Args({16, 0})->Args({16, 1})->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  set_verbosity(Verbosity::Quiet);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
