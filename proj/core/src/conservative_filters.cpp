#include "fieldpipe/conservative_filters.hpp"

#include "fieldpipe/error.hpp"
#include "fieldpipe/log.hpp"
#include "fieldpipe/parallel.hpp"
#include "fieldpipe/point_locator.hpp"
#include "fieldpipe/spatial_index.hpp"

#include <cmath>

namespace fieldpipe {

namespace {

constexpr double kAxisAlignedTolerance = 1e-10;

struct CellRef {
  std::size_t region;
  std::size_t elem;
};

std::vector<CellRef> cells_of(const Mesh& mesh, const std::vector<std::string>& regions) {
  std::vector<CellRef> cells;
  for (const auto& name : regions) {
    const auto r = mesh.region_index(name);
    for (std::size_t e = 0; e < mesh.element_count(r); ++e) cells.push_back({r, e});
  }
  return cells;
}

}  // namespace

std::optional<BoundingBox> axis_aligned_hex_box(const Mesh& mesh, std::size_t region, std::size_t elem) {
  const auto e = mesh.element(region, elem);
  if (e.type != ElementType::Hexa8) return std::nullopt;
  const auto box = element_box(mesh, region, elem);
  const double tol = kAxisAlignedTolerance * box.diagonal();
  const Vec3 size = box.hi - box.lo;
  if ((size.array() <= tol).any()) return std::nullopt;
  for (int i = 0; i < 8; ++i) {
    const Vec3 ref = reference_node(ElementType::Hexa8, i);
    const Vec3 corner = box.lo + (0.5 * (ref.array() + 1.0) * size.array()).matrix();
    if ((mesh.node(e.nodes[static_cast<std::size_t>(i)]) - corner).norm() > tol) return std::nullopt;
  }
  return box;
}

ConservativeInterpolator::ConservativeInterpolator(const Mesh& source, std::vector<std::string> source_regions,
                                                   const Mesh& target, std::vector<std::string> target_regions,
                                                   ConservativeVariant variant)
    : source_regions_(std::move(source_regions)), target_regions_(std::move(target_regions)), variant_(variant) {
  for (const auto& name : target_regions_) {
    const auto r = target.region_index(name);
    if (target.element_count(r) == 0) throw ValidationError("conservative interpolation: target region '" + name + "' is empty");
    target_sizes_.push_back(target.region_nodes(r).size());
  }
  if (variant_ == ConservativeVariant::CellCentroid) {
    build_centroid(source, target);
  } else {
    build_cutcell(source, target);
  }
}

void ConservativeInterpolator::build_centroid(const Mesh& source, const Mesh& target) {
  const auto cells = cells_of(source, source_regions_);
  std::vector<std::size_t> target_ids;
  for (const auto& name : target_regions_) target_ids.push_back(target.region_index(name));
  const PointLocator locator(target, target_ids);

  measure_.resize(cells.size());
  covered_.assign(cells.size(), 0.0);
  std::vector<std::vector<Contribution>> per_cell(cells.size());
  parallel_for(cells.size(), [&](std::size_t c) {
    const auto [r, e] = cells[c];
    const double volume = source.measure(r, e);
    measure_[c] = volume;
    const auto loc = locator.locate(source.centroid(r, e));
    if (!loc) return;
    const auto slot = static_cast<std::size_t>(
        std::find(target_ids.begin(), target_ids.end(), loc->region) - target_ids.begin());
    const auto elem = target.element(loc->region, loc->elem);
    const auto n = shape_values_unchecked(elem.type, loc->local);
    for (int i = 0; i < n.n; ++i) {
      const auto local = *target.local_node(loc->region, elem.nodes[static_cast<std::size_t>(i)]);
      per_cell[c].push_back({static_cast<std::uint32_t>(slot), static_cast<std::uint32_t>(local), volume * n[i]});
    }
    covered_[c] = volume;
  });
  for (auto& list : per_cell) {
    contributions_.insert(contributions_.end(), list.begin(), list.end());
    start_.push_back(contributions_.size());
  }
}

void ConservativeInterpolator::build_cutcell(const Mesh& source, const Mesh& target) {
  const auto cells = cells_of(source, source_regions_);
  std::vector<BoundingBox> source_boxes(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto box = axis_aligned_hex_box(source, cells[c].region, cells[c].elem);
    if (!box) {
      throw ValidationError("cut-cell supports axis-aligned hexahedral meshes; source region '" +
                            source.regions()[cells[c].region].name + "' element " + std::to_string(cells[c].elem) +
                            " is not an axis-aligned HEXA8");
    }
    source_boxes[c] = *box;
  }
  std::vector<CellRef> targets;
  std::vector<std::size_t> target_slot;
  std::vector<BoundingBox> target_boxes;
  for (std::size_t s = 0; s < target_regions_.size(); ++s) {
    const auto r = target.region_index(target_regions_[s]);
    for (std::size_t e = 0; e < target.element_count(r); ++e) {
      const auto box = axis_aligned_hex_box(target, r, e);
      if (!box) {
        throw ValidationError("cut-cell supports axis-aligned hexahedral meshes; target region '" +
                              target_regions_[s] + "' element " + std::to_string(e) +
                              " is not an axis-aligned HEXA8");
      }
      targets.push_back({r, e});
      target_slot.push_back(s);
      target_boxes.push_back(*box);
    }
  }
  const BoxIndex index(target_boxes);

  measure_.resize(cells.size());
  covered_.assign(cells.size(), 0.0);
  std::vector<std::vector<Contribution>> per_cell(cells.size());
  parallel_for(cells.size(), [&](std::size_t c) {
    const auto& sb = source_boxes[c];
    measure_[c] = (sb.hi - sb.lo).prod();
    for (const auto t : index.overlapping(sb)) {
      const auto& tb = target_boxes[t];
      const Vec3 lo = sb.lo.cwiseMax(tb.lo);
      const Vec3 hi = sb.hi.cwiseMin(tb.hi);
      if ((hi.array() <= lo.array()).any()) continue;
      const double volume = (hi - lo).prod();
      const Vec3 centre = 0.5 * (lo + hi);
      const Vec3 local = (2.0 * (centre - tb.lo).array() / (tb.hi - tb.lo).array() - 1.0).matrix();
      const auto elem = target.element(targets[t].region, targets[t].elem);
      const auto n = shape_values_unchecked(ElementType::Hexa8, local);
      for (int i = 0; i < 8; ++i) {
        const auto node = *target.local_node(targets[t].region, elem.nodes[static_cast<std::size_t>(i)]);
        per_cell[c].push_back(
            {static_cast<std::uint32_t>(target_slot[t]), static_cast<std::uint32_t>(node), volume * n[i]});
      }
      covered_[c] += volume;
    }
  });
  for (auto& list : per_cell) {
    contributions_.insert(contributions_.end(), list.begin(), list.end());
    start_.push_back(contributions_.size());
  }
}

FieldStep ConservativeInterpolator::apply(const FieldStep& step, const std::string& output_name,
                                          ConservationReport* report) const {
  const char* name = variant_ == ConservativeVariant::CellCentroid ? "Conservative_CellCentroid"
                                                                    : "Conservative_CutCell";
  if (step.quantity.defined_on != DefinedOn::Cell) {
    throw ValidationError(std::string(name) + " expects CELL data, but '" + step.quantity.name +
                          "' is defined on NODE");
  }
  const auto lanes = static_cast<std::size_t>(step.quantity.lanes());
  FieldStep out;
  out.quantity = step.quantity;
  out.quantity.name = output_name;
  out.quantity.defined_on = DefinedOn::Node;
  out.quantity.regions = target_regions_;
  out.step_index = step.step_index;
  out.step_value = step.step_value;
  for (const auto n : target_sizes_) out.values.emplace_back(n * lanes, 0.0);

  ConservationReport local_report;
  local_report.source_integral.assign(lanes, 0.0);
  local_report.lost_integral.assign(lanes, 0.0);
  double total_abs = 0.0;
  double lost_abs = 0.0;
  std::size_t c = 0;
  for (const auto& region : source_regions_) {
    const auto values = step.region_values(region);
    const std::size_t count = values.size() / lanes;
    for (std::size_t e = 0; e < count; ++e, ++c) {
      const double* f = values.data() + e * lanes;
      for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) {
        const auto& ct = contributions_[k];
        double* dst = out.values[ct.slot].data() + static_cast<std::size_t>(ct.local) * lanes;
        for (std::size_t l = 0; l < lanes; ++l) dst[l] += f[l] * ct.weight;
      }
      double missing = measure_[c] - covered_[c];
      if (std::abs(missing) <= 1e-12 * measure_[c]) missing = 0.0;
      if (covered_[c] == 0.0) ++local_report.lost_cells;
      for (std::size_t l = 0; l < lanes; ++l) {
        local_report.source_integral[l] += f[l] * measure_[c];
        local_report.lost_integral[l] += f[l] * missing;
        total_abs += std::abs(f[l]) * measure_[c];
        lost_abs += std::abs(f[l] * missing);
      }
    }
  }
  if (c != measure_.size()) {
    throw ValidationError(std::string(name) + ": input '" + step.quantity.name + "' has " + std::to_string(c) +
                          " cells on the source regions, expected " + std::to_string(measure_.size()));
  }
  if (lost_abs > 0.0) {
    logger()->warn("{}: {} source cells outside the target, {:.6g}% of source integral outside target", name,
                   local_report.lost_cells, total_abs > 0.0 ? 100.0 * lost_abs / total_abs : 100.0);
  }
  if (report) *report = std::move(local_report);
  return out;
}

}  // namespace fieldpipe
