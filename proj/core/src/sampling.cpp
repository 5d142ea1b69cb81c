#include "fieldpipe/sampling.hpp"

#include "fieldpipe/error.hpp"

#include <limits>

namespace fieldpipe {

PointSet make_point_set(const Mesh& mesh, std::span<const std::string> regions, DefinedOn on) {
  PointSet set;
  set.on = on;
  set.regions.assign(regions.begin(), regions.end());
  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> point_of_node(on == DefinedOn::Node ? mesh.node_count() : 0, kUnset);
  for (const auto& name : regions) {
    const auto r = mesh.region_index(name);
    std::vector<std::uint32_t> map;
    if (on == DefinedOn::Node) {
      for (const auto n : mesh.region_nodes(r)) {
        if (point_of_node[n] == kUnset) {
          point_of_node[n] = static_cast<std::uint32_t>(set.points.size());
          set.points.push_back(mesh.node(n));
          set.node_ids.push_back(n);
        }
        map.push_back(point_of_node[n]);
      }
    } else {
      const auto n = mesh.element_count(r);
      for (std::size_t e = 0; e < n; ++e) {
        map.push_back(static_cast<std::uint32_t>(set.points.size()));
        set.points.push_back(mesh.centroid(r, e));
      }
    }
    set.region_map.push_back(std::move(map));
  }
  return set;
}

std::vector<double> gather(const PointSet& set, const FieldStep& step) {
  const auto lanes = static_cast<std::size_t>(step.quantity.lanes());
  std::vector<double> dense(set.size() * lanes, 0.0);
  std::vector<bool> filled(set.size(), false);
  for (std::size_t s = 0; s < set.regions.size(); ++s) {
    const auto values = step.region_values(set.regions[s]);
    const auto& map = set.region_map[s];
    if (values.size() != map.size() * lanes) {
      throw ValidationError("quantity '" + step.quantity.name + "' region '" + set.regions[s] + "': " +
                            std::to_string(values.size()) + " values for " + std::to_string(map.size()) +
                            " entities");
    }
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (filled[map[i]]) continue;
      filled[map[i]] = true;
      for (std::size_t l = 0; l < lanes; ++l) dense[map[i] * lanes + l] = values[i * lanes + l];
    }
  }
  return dense;
}

std::vector<std::vector<double>> scatter(const PointSet& set, std::span<const double> dense, int lanes) {
  const auto nl = static_cast<std::size_t>(lanes);
  std::vector<std::vector<double>> out;
  out.reserve(set.region_map.size());
  for (const auto& map : set.region_map) {
    std::vector<double> v(map.size() * nl);
    for (std::size_t i = 0; i < map.size(); ++i) {
      for (std::size_t l = 0; l < nl; ++l) v[i * nl + l] = dense[map[i] * nl + l];
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> SparseOperator::apply(std::span<const double> in, int lanes) const {
  const auto nl = static_cast<std::size_t>(lanes);
  std::vector<double> out(rows() * nl, 0.0);
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t l = 0; l < nl; ++l) {
      double acc = 0.0;
      for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k) acc += weight[k] * in[index[k] * nl + l];
      out[r * nl + l] = acc;
    }
  }
  return out;
}

SparseOperator assemble(std::size_t cols,
                        const std::vector<std::vector<std::pair<std::uint32_t, double>>>& rows) {
  SparseOperator op;
  op.cols = cols;
  op.row_start.reserve(rows.size() + 1);
  for (const auto& row : rows) {
    for (const auto& [i, w] : row) {
      op.index.push_back(i);
      op.weight.push_back(w);
    }
    op.row_start.push_back(op.index.size());
  }
  return op;
}

}  // namespace fieldpipe
