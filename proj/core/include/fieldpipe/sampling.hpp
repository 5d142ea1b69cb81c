#pragma once

#include "fieldpipe/field.hpp"
#include "fieldpipe/mesh.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fieldpipe {

/// Sample points of a field over a list of regions. NODE points are unique
/// per global node (first region wins); CELL points are element centroids.
struct PointSet {
  DefinedOn on = DefinedOn::Node;
  std::vector<std::string> regions;
  std::vector<Vec3> points;
  /// For every region, the point index of each entity in that region's
  /// value array.
  std::vector<std::vector<std::uint32_t>> region_map;
  /// Global node index per point (NODE sets only).
  std::vector<std::uint32_t> node_ids;

  std::size_t size() const { return points.size(); }
};

PointSet make_point_set(const Mesh& mesh, std::span<const std::string> regions, DefinedOn on);

/// Point-major dense copy of a step's values on `set` (lanes contiguous).
/// Throws ValidationError when the step lacks one of the set's regions.
std::vector<double> gather(const PointSet& set, const FieldStep& step);

/// Splits point-major values back into per-region arrays of `set`.
std::vector<std::vector<double>> scatter(const PointSet& set, std::span<const double> dense, int lanes);

/// Row-compressed linear map from source points to target points. Rows are
/// applied lane by lane with a fixed summation order.
struct SparseOperator {
  std::size_t cols = 0;
  std::vector<std::size_t> row_start{0};
  std::vector<std::uint32_t> index;
  std::vector<double> weight;

  std::size_t rows() const { return row_start.size() - 1; }
  std::vector<double> apply(std::span<const double> in, int lanes) const;
};

/// Concatenates per-row (index, weight) lists into an operator.
SparseOperator assemble(std::size_t cols, const std::vector<std::vector<std::pair<std::uint32_t, double>>>& rows);

}  // namespace fieldpipe
