#include "fieldpipe/pipeline_executor.hpp"

#include "fieldpipe/aeroacoustic.hpp"
#include "fieldpipe/conservative_filters.hpp"
#include "fieldpipe/ensight.hpp"
#include "fieldpipe/error.hpp"
#include "fieldpipe/interp_filters.hpp"
#include "fieldpipe/log.hpp"
#include "fieldpipe/parallel.hpp"
#include "fieldpipe/rbf_fd.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <optional>
#include <set>

namespace fieldpipe {

namespace fs = std::filesystem;

namespace {

std::string mesh_key(const fs::path& p) { return fs::weakly_canonical(p).string(); }

Manifest ensight_manifest(const InputSpec& in) {
  const auto c = parse_ensight_case(in.file);
  Manifest m;
  m.analysis = AnalysisDomain::Time;
  for (std::size_t s = 0; s < c.step_count; ++s) m.steps.push_back({s, c.time_values[s]});
  VariableMap map = in.variables;
  if (map.empty()) {
    for (const auto& v : c.variables) map.push_back({sanitize_part_name(v.description), v.description});
  }
  for (const auto& v : map) {
    const auto* var = c.find(v.ensight_name);
    if (!var) {
      std::string available;
      for (const auto& x : c.variables) available += (available.empty() ? "" : ", ") + x.description;
      throw ValidationError("Ensight case '" + in.file.string() + "' has no variable '" + v.ensight_name +
                            "' (available: " + available + ")");
    }
    QuantityEntry e;
    e.quantity.name = v.cfs_name;
    e.quantity.defined_on = var->defined_on;
    e.quantity.components = var->components;
    for (std::size_t s = 0; s < c.step_count; ++s) e.steps.push_back(s);
    m.quantities.push_back(std::move(e));
  }
  return m;
}

std::size_t producer_of(const PipelineGraph& g, const FilterSpec& f, const std::string& name) {
  for (const auto& in : f.inputs) {
    const auto p = g.index.at(in);
    if (g.shapes[p].count(name)) return p;
  }
  throw ValidationError(f.where() + ": no input filter produces '" + name + "'");
}

}  // namespace

ValidatedPipeline validate_pipeline(const fs::path& document) {
  return validate_pipeline(parse_pipeline_file(document));
}

ValidatedPipeline validate_pipeline(PipelineDocument doc) {
  ValidatedPipeline v;
  v.graph = build_graph(std::move(doc));
  auto& g = v.graph;
  const auto& svd = g.doc.steps;

  InputCatalog catalog;
  std::optional<AnalysisDomain> domain;
  for (const auto& f : g.doc.filters) {
    if (f.kind != FilterKind::MeshInput) continue;
    Manifest m = f.input.format == InputSpec::Format::Native ? read_manifest(f.input.file) : ensight_manifest(f.input);
    if (domain && *domain != m.analysis) {
      throw ValidationError(f.where() + ": mixes " + std::string(to_string(m.analysis)) + " and " +
                            std::string(to_string(*domain)) + " inputs");
    }
    domain = m.analysis;
    try {
      v.schedules[f.id] = resolve_schedule(svd, m.steps);
    } catch (const ValidationError& e) {
      throw ValidationError(f.where() + ": " + e.what());
    }
    auto& shapes = catalog[f.id];
    for (const auto& q : m.quantities) {
      QuantityShape s{q.quantity.defined_on, q.quantity.components, m.analysis, std::nullopt};
      if (!q.quantity.regions.empty()) s.regions = q.quantity.regions;
      shapes[q.quantity.name] = s;
    }
    v.manifests[f.id] = std::move(m);
  }
  check_quantities(g, catalog, svd.num_steps);

  const auto n = g.doc.filters.size();
  v.routes.resize(n);
  v.mesh_keys.resize(n);
  std::set<std::string> output_paths;
  for (const auto i : g.order) {
    const auto& f = g.doc.filters[i];
    if (f.kind == FilterKind::MeshInput) {
      v.mesh_keys[i] = mesh_key(f.input.file);
      continue;
    }
    std::optional<std::string> key;
    for (const auto& name : f.consumed()) {
      const auto p = producer_of(g, f, name);
      v.routes[i][name] = p;
      if (key && *key != v.mesh_keys[p]) {
        throw ValidationError(f.where() + ": inputs live on different meshes ('" + *key + "' and '" +
                              v.mesh_keys[p] + "')");
      }
      key = v.mesh_keys[p];
    }
    if (f.kind == FilterKind::Node2Cell || f.kind == FilterKind::Cell2Node) {
      if (!f.target_mesh) {
        throw ValidationError(f.where() + ": requires a <targetMesh>, a geometry-only copy of the source mesh "
                                          "(see 'fieldpipe strip-mesh')");
      }
      if (mesh_key(*f.target_mesh) == *key) {
        throw ValidationError(f.where() + ": the target mesh must be a different file than the source mesh");
      }
    }
    if (f.target_mesh) {
      if (!fs::exists(*f.target_mesh / "mesh.json")) {
        throw IoError(f.where() + ": target mesh '" + f.target_mesh->string() + "' does not exist");
      }
      key = mesh_key(*f.target_mesh);
    }
    v.mesh_keys[i] = *key;
    if (f.kind == FilterKind::MeshOutput) {
      const auto out = mesh_key(f.output.path);
      if (!output_paths.insert(out).second) {
        throw ValidationError(f.where() + ": output '" + f.output.path.string() + "' is written twice");
      }
      for (const auto& in : g.doc.filters) {
        if (in.kind == FilterKind::MeshInput && mesh_key(in.input.file) == out) {
          throw ValidationError(f.where() + ": output '" + f.output.path.string() + "' would overwrite an input");
        }
      }
    }
  }

  // Every quantity read from an input must exist for every scheduled step.
  for (const auto i : g.order) {
    const auto& f = g.doc.filters[i];
    if (f.kind != FilterKind::MeshInput) continue;
    const auto& m = v.manifests.at(f.id);
    for (std::size_t c = 0; c < n; ++c) {
      for (const auto& [name, p] : v.routes[c]) {
        if (p != i) continue;
        const auto* q = m.find(name);
        for (const auto& e : v.schedules.at(f.id).entries) {
          if (!std::binary_search(q->steps.begin(), q->steps.end(), e.input_index)) {
            throw ValidationError(f.where() + ": quantity '" + name + "' has no data at step value " +
                                  std::to_string(e.input_value));
          }
        }
      }
    }
  }
  return v;
}

namespace {

struct Result {
  std::shared_ptr<const Mesh> mesh;
  std::string mesh_key;
  FieldStep step;
};

using ResultSet = std::map<std::string, Result>;

class MeshCache {
 public:
  void add(const std::string& key, std::shared_ptr<const Mesh> mesh) { meshes_.emplace(key, std::move(mesh)); }
  std::shared_ptr<const Mesh> get(const fs::path& path) {
    const auto key = mesh_key(path);
    auto it = meshes_.find(key);
    if (it == meshes_.end()) it = meshes_.emplace(key, read_target_mesh(path)).first;
    return it->second;
  }
  std::shared_ptr<const Mesh> find(const std::string& key) const {
    const auto it = meshes_.find(key);
    return it == meshes_.end() ? nullptr : it->second;
  }

 private:
  std::map<std::string, std::shared_ptr<const Mesh>> meshes_;
};

std::vector<std::string> all_regions(const Mesh& mesh) {
  std::vector<std::string> out;
  for (const auto& r : mesh.regions()) out.push_back(r.name);
  return out;
}

// Re-raises the active exception with the filter's context prefixed.
[[noreturn]] void rethrow_in(const FilterSpec& f) {
  const auto prefix = "filter " + f.where() + ": ";
  try {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const std::exception& e) {
    throw FilterError(prefix + e.what());
  }
}

/// Runtime state of one processing filter. Operators are built on the first
/// step, from the mesh of the first arriving result.
class FilterNode {
 public:
  FilterNode(const FilterSpec& spec, MeshCache& cache) : spec_(spec), cache_(cache) {}

  std::vector<Result> process(const ResultSet& in) {
    const auto& first = in.begin()->second;
    if (!source_) prepare(first);
    for (const auto& [name, r] : in) {
      if (r.mesh != source_) throw FilterError("input '" + name + "' changed mesh between steps");
    }
    std::optional<FieldStep> out;
    const auto& name = spec_.output_quantity;
    switch (spec_.kind) {
      case FilterKind::Node2Cell:
        out = node_to_cell(in.at(spec_.input_quantity).step, *source_, source_regions_, *target_, target_regions_,
                           name);
        break;
      case FilterKind::Cell2Node:
        out = cell_to_node(in.at(spec_.input_quantity).step, *source_, source_regions_, *target_, target_regions_,
                           name);
        break;
      case FilterKind::NearestNeighbour: out = shepard_->apply(in.at(spec_.input_quantity).step, name); break;
      case FilterKind::Rbf: out = rbf_->apply(in.at(spec_.input_quantity).step, name); break;
      case FilterKind::ConservativeCellCentroid:
      case FilterKind::ConservativeCutCell: {
        ConservationReport report;
        out = conservative_->apply(in.at(spec_.input_quantity).step, name, &report);
        if (report.lost_cells > 0) {
          const double total = report.source_integral.empty() ? 0.0 : std::abs(report.source_integral[0]);
          const double lost = report.lost_integral.empty() ? 0.0 : std::abs(report.lost_integral[0]);
          logger()->warn("{}: {} source cells outside the target, {:.3g}% of source integral outside target",
                         spec_.id, report.lost_cells, total > 0.0 ? 100.0 * lost / total : 0.0);
        }
        break;
      }
      case FilterKind::Gradient:
        out = diff_->apply(SpatialOperator::Gradient, in.at(spec_.input_quantity).step, name);
        break;
      case FilterKind::Divergence:
        out = diff_->apply(SpatialOperator::Divergence, in.at(spec_.input_quantity).step, name);
        break;
      case FilterKind::Curl: out = diff_->apply(SpatialOperator::Curl, in.at(spec_.input_quantity).step, name); break;
      case FilterKind::LambVector:
      case FilterKind::LighthillVector:
      case FilterKind::LighthillScalar: {
        const FieldStep* w = spec_.vorticity ? &in.at(*spec_.vorticity).step : nullptr;
        out = aero_->apply(in.at(spec_.velocity).step, w, name);
        break;
      }
      case FilterKind::TimeDeriv1: out = time_->push(in.at(spec_.input_quantity).step); break;
      default: throw FilterError("not a processing filter");
    }
    if (!out) return {};
    return {Result{target_, target_key_, std::move(*out)}};
  }

 private:
  void prepare(const Result& first) {
    source_ = first.mesh;
    if (spec_.target_mesh) {
      target_ = cache_.get(*spec_.target_mesh);
      target_key_ = mesh_key(*spec_.target_mesh);
    } else {
      target_ = source_;
      target_key_ = first.mesh_key;
    }
    source_regions_ = spec_.source_regions.empty() ? first.step.quantity.regions : spec_.source_regions;
    if (!spec_.target_regions.empty()) {
      target_regions_ = spec_.target_regions;
    } else if (spec_.kind == FilterKind::Node2Cell || spec_.kind == FilterKind::Cell2Node) {
      target_regions_ = source_regions_;
    } else {
      target_regions_ = all_regions(*target_);
    }
    const auto on = first.step.quantity.defined_on;
    switch (spec_.kind) {
      case FilterKind::NearestNeighbour:
        shepard_.emplace(*source_, source_regions_, *target_, target_regions_, on, spec_.shepard);
        break;
      case FilterKind::Rbf: rbf_.emplace(*source_, source_regions_, *target_, target_regions_, on, spec_.rbf); break;
      case FilterKind::ConservativeCellCentroid:
      case FilterKind::ConservativeCutCell:
        conservative_.emplace(*source_, source_regions_, *target_, target_regions_,
                              spec_.kind == FilterKind::ConservativeCutCell ? ConservativeVariant::CutCell
                                                                            : ConservativeVariant::CellCentroid);
        break;
      case FilterKind::Gradient:
      case FilterKind::Divergence:
      case FilterKind::Curl:
        diff_.emplace(*source_, source_regions_, *target_, target_regions_, spec_.rbf_fd);
        break;
      case FilterKind::LambVector:
      case FilterKind::LighthillVector:
      case FilterKind::LighthillScalar: {
        const auto kind = spec_.kind == FilterKind::LambVector        ? AeroSource::LambVector
                          : spec_.kind == FilterKind::LighthillVector ? AeroSource::LighthillVector
                                                                      : AeroSource::LighthillScalar;
        aero_.emplace(kind, *source_, source_regions_, *target_, target_regions_, spec_.rbf_fd);
        break;
      }
      case FilterKind::TimeDeriv1:
        target_ = source_;
        target_key_ = first.mesh_key;
        time_.emplace(spec_.output_quantity);
        break;
      default: break;
    }
  }

  const FilterSpec& spec_;
  MeshCache& cache_;
  std::shared_ptr<const Mesh> source_;
  std::shared_ptr<const Mesh> target_;
  std::string target_key_;
  std::vector<std::string> source_regions_;
  std::vector<std::string> target_regions_;
  std::optional<ShepardInterpolator> shepard_;
  std::optional<RbfInterpolator> rbf_;
  std::optional<ConservativeInterpolator> conservative_;
  std::optional<Differentiator> diff_;
  std::optional<AeroacousticSourceFilter> aero_;
  std::optional<TimeDerivative> time_;
};

FieldStep select_regions(const FieldStep& step, const OutputResult& request, const FilterSpec& out) {
  if (request.all_regions) return step;
  FieldStep sel;
  sel.quantity = step.quantity;
  sel.quantity.regions.clear();
  sel.step_index = step.step_index;
  sel.step_value = step.step_value;
  for (const auto& name : request.regions) {
    const auto slot = step.region_slot(name);
    if (!slot) {
      throw ValidationError(out.where() + ": result '" + request.name + "' is not defined on region '" + name + "'");
    }
    sel.quantity.regions.push_back(name);
    sel.values.push_back(step.values[*slot]);
  }
  return sel;
}

struct OutputState {
  std::unique_ptr<NativeWriter> writer;
  std::string mesh_key;
  std::map<std::string, FieldQuantity> declared;
  std::map<std::size_t, std::vector<FieldStep>> staged;  // by step index
};

}  // namespace

RunSummary run_pipeline(const fs::path& document, const RunOptions& options) {
  return run_pipeline(validate_pipeline(document), options);
}

RunSummary run_pipeline(const ValidatedPipeline& pipeline, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  set_thread_count(options.threads);
  const auto& g = pipeline.graph;
  const auto& filters = g.doc.filters;
  const auto n = filters.size();
  const auto& svd = g.doc.steps;

  MeshCache cache;
  std::vector<std::unique_ptr<DataSource>> readers(n);
  std::optional<AnalysisDomain> domain;
  for (const auto i : g.order) {
    const auto& f = filters[i];
    if (f.kind != FilterKind::MeshInput) continue;
    try {
      if (f.input.format == InputSpec::Format::Native) {
        readers[i] = read_native(f.input.file);
      } else {
        readers[i] = read_ensight(f.input.file, f.input.variables, f.input.fix_fv_pyramids);
      }
    } catch (...) {
      rethrow_in(f);
    }
    domain = readers[i]->manifest().analysis;
    cache.add(pipeline.mesh_keys[i], readers[i]->mesh());
  }

  // Quantities each input must supply.
  std::vector<std::set<std::string>> wanted(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (const auto& [name, p] : pipeline.routes[c]) wanted[p].insert(name);
  }

  std::vector<std::unique_ptr<FilterNode>> nodes(n);
  std::vector<OutputState> outputs(n);
  for (const auto i : g.order) {
    const auto& f = filters[i];
    if (f.kind == FilterKind::MeshInput) continue;
    if (f.kind != FilterKind::MeshOutput) {
      nodes[i] = std::make_unique<FilterNode>(f, cache);
      if (f.target_mesh) {
        try {
          cache.get(*f.target_mesh);
        } catch (...) {
          rethrow_in(f);
        }
      }
      continue;
    }
    auto& o = outputs[i];
    o.mesh_key = pipeline.mesh_keys[i];
    const auto mesh = cache.find(o.mesh_key);
    if (!mesh) throw FilterError(f.where() + ": output mesh '" + o.mesh_key + "' is not loaded");
    try {
      o.writer = std::make_unique<NativeWriter>(f.output.path, mesh, domain.value_or(AnalysisDomain::Time));
    } catch (...) {
      rethrow_in(f);
    }
  }

  // pending[c][step index][name]
  std::vector<std::map<std::size_t, ResultSet>> pending(n);
  auto deliver = [&](std::size_t producer, const Result& r) {
    for (std::size_t c = 0; c < n; ++c) {
      const auto it = pipeline.routes[c].find(r.step.quantity.name);
      if (it != pipeline.routes[c].end() && it->second == producer) {
        pending[c][r.step.step_index].emplace(r.step.quantity.name, r);
      }
    }
  };

  const std::size_t steps = svd.num_steps;
  for (std::size_t j = 0; j < steps; ++j) {
    const double out_value = svd.output_value(j);
    for (const auto i : g.order) {
      const auto& f = filters[i];
      if (options.before_filter) {
        try {
          options.before_filter(f.id, j);
        } catch (...) {
          rethrow_in(f);
        }
      }
      try {
        if (f.kind == FilterKind::MeshInput) {
          const auto& entry = pipeline.schedules.at(f.id).entries[j];
          for (const auto& name : wanted[i]) {
            auto step = readers[i]->read_step(name, entry.input_index);
            step.step_index = j;
            step.step_value = out_value;
            deliver(i, Result{readers[i]->mesh(), pipeline.mesh_keys[i], std::move(step)});
          }
          continue;
        }
        const auto needed = pipeline.routes[i].size();
        auto& queue = pending[i];
        if (f.kind == FilterKind::MeshOutput) {
          auto& o = outputs[i];
          for (auto it = queue.begin(); it != queue.end();) {
            for (const auto& request : f.output.results) {
              const auto r = it->second.find(request.name);
              if (r == it->second.end()) continue;
              if (r->second.mesh_key != o.mesh_key) {
                throw ValidationError("result '" + request.name + "' lives on mesh '" + r->second.mesh_key +
                                      "', not on the output mesh '" + o.mesh_key + "'");
              }
              auto sel = select_regions(r->second.step, request, f);
              if (!o.declared.count(request.name)) {
                o.writer->declare(sel.quantity);
                o.declared.emplace(request.name, sel.quantity);
              }
              o.staged[it->first].push_back(std::move(sel));
            }
            it = queue.erase(it);
          }
          continue;
        }
        for (auto it = queue.begin(); it != queue.end();) {
          if (it->second.size() < needed) {
            ++it;
            continue;
          }
          for (auto& r : nodes[i]->process(it->second)) deliver(i, r);
          it = queue.erase(it);
        }
      } catch (...) {
        rethrow_in(f);
      }
    }
    for (const auto i : g.order) {
      auto& o = outputs[i];
      if (!o.writer) continue;
      try {
        for (auto& [index, results] : o.staged) {
          o.writer->write_step(index, results.front().step_value, results);
        }
      } catch (...) {
        rethrow_in(filters[i]);
      }
      o.staged.clear();
    }
    logger()->info("step {}/{} (value {:g}) done", j + 1, steps, out_value);
  }

  for (const auto& f : filters) {
    if (f.kind == FilterKind::TimeDeriv1) {
      logger()->info("{}: the first two and last two steps carry no derivative and are omitted", f.id);
    }
  }

  RunSummary summary;
  summary.steps = steps;
  std::set<std::string> names;
  for (const auto i : g.order) {
    const auto& o = outputs[i];
    if (!o.writer) continue;
    OutputSummary s;
    s.path = o.writer->root();
    s.steps = o.writer->manifest().steps.size();
    for (const auto& q : o.writer->manifest().quantities) {
      s.quantities.push_back(q.quantity.name);
      names.insert(s.path.string() + "/" + q.quantity.name);
    }
    summary.outputs.push_back(std::move(s));
  }
  summary.quantities = names.size();
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return summary;
}

}  // namespace fieldpipe
