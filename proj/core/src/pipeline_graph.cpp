#include "fieldpipe/pipeline_graph.hpp"

#include "fieldpipe/error.hpp"
#include "fieldpipe/log.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <queue>
#include <set>

namespace fieldpipe {

namespace fs = std::filesystem;

namespace {

struct TypeName {
  FilterKind kind;
  const char* element;
  const char* type;
};

constexpr TypeName kTypes[] = {
    {FilterKind::Cell2Node, "interpolation", "FieldInterpolation_Cell2Node"},
    {FilterKind::Node2Cell, "interpolation", "FieldInterpolation_Node2Cell"},
    {FilterKind::NearestNeighbour, "interpolation", "FieldInterpolation_NearestNeighbour"},
    {FilterKind::Rbf, "interpolation", "FieldInterpolation_RBF"},
    {FilterKind::ConservativeCellCentroid, "interpolation", "FieldInterpolation_Conservative_CellCentroid"},
    {FilterKind::ConservativeCutCell, "interpolation", "FieldInterpolation_Conservative_CutCell"},
    {FilterKind::Gradient, "differentiation", "SpaceDifferentiation_Gradient"},
    {FilterKind::Divergence, "differentiation", "SpaceDifferentiation_Divergence"},
    {FilterKind::Curl, "differentiation", "SpaceDifferentiation_Curl"},
    {FilterKind::LambVector, "aeroacoustic", "AeroacousticSource_LambVector"},
    {FilterKind::LighthillScalar, "aeroacoustic", "AeroacousticSource_LighthillSourceTerm"},
    {FilterKind::LighthillVector, "aeroacoustic", "AeroacousticSource_LighthillSourceTermVector"},
};

std::string at(const XmlElement& e, const std::string& doc) {
  return doc + " line " + std::to_string(e.line) + ": <" + e.name + ">";
}

[[noreturn]] void fail(const XmlElement& e, const std::string& doc, const std::string& what) {
  throw ValidationError(at(e, doc) + " " + what);
}

const std::string& required_attr(const XmlElement& e, const char* key, const std::string& doc) {
  const auto* v = e.attribute(key);
  if (!v || v->empty()) fail(e, doc, std::string("requires attribute '") + key + "'");
  return *v;
}

// Empty attributes count as absent, as in `kScaling=""`.
const std::string* optional_attr(const XmlElement& e, const char* key) {
  const auto* v = e.attribute(key);
  return (v && !v->empty()) ? v : nullptr;
}

double to_double(const XmlElement& e, const std::string& text, const char* what, const std::string& doc) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    fail(e, doc, std::string(what) + " '" + text + "' is not a number");
  }
  return v;
}

std::size_t to_count(const XmlElement& e, const std::string& text, const char* what, const std::string& doc) {
  std::size_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    fail(e, doc, std::string(what) + " '" + text + "' is not a non-negative integer");
  }
  return v;
}

bool to_bool(const XmlElement& e, const std::string& text, const char* what, const std::string& doc) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  fail(e, doc, std::string(what) + " '" + text + "' is not a boolean");
}

std::vector<std::string> split_ids(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == ' ' || c == ',' || c == '\t' || c == '\n' || c == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

void warn_ignored(const XmlElement& e, const char* key, const std::string& doc) {
  if (e.attribute(key)) logger()->warn("{} attribute '{}' is not supported and ignored", at(e, doc), key);
}

// <hdf5 fileName=.../> or <native fileName=.../> inside `parent`.
const XmlElement* file_element(const XmlElement& parent) {
  if (const auto* h = parent.child("hdf5")) return h;
  return parent.child("native");
}

fs::path resolve(const fs::path& base, const std::string& file) {
  const fs::path p(file);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

StepValueDefinition parse_steps(const XmlElement& e, const std::string& doc) {
  const auto* ss = e.child("startStop");
  if (!ss) fail(e, doc, "requires a <startStop> block");
  StepValueDefinition svd;
  auto value_of = [&](const char* name) -> const std::string* {
    const auto* c = ss->child(name);
    if (!c) return nullptr;
    return &required_attr(*c, "value", doc);
  };
  if (const auto* v = value_of("startStep")) svd.start_step = to_count(*ss, *v, "startStep", doc);
  if (const auto* v = value_of("numSteps")) {
    svd.num_steps = to_count(*ss, *v, "numSteps", doc);
  } else {
    fail(*ss, doc, "requires <numSteps>");
  }
  if (const auto* v = value_of("startTime")) svd.start_time = to_double(*ss, *v, "startTime", doc);
  if (const auto* v = value_of("delta")) {
    svd.delta = to_double(*ss, *v, "delta", doc);
  } else {
    fail(*ss, doc, "requires <delta>");
  }
  if (const auto* v = value_of("deleteOffset")) svd.delete_offset = to_bool(*ss, *v, "deleteOffset", doc);
  try {
    svd.validate();
  } catch (const ValidationError& err) {
    fail(*ss, doc, err.what());
  }
  return svd;
}

void parse_input(const XmlElement& e, FilterSpec& f, const fs::path& base, const std::string& doc) {
  warn_ignored(e, "gridType", doc);
  const auto* file = e.child("inputFile");
  if (!file) fail(e, doc, "requires an <inputFile> block");
  if (const auto* ens = file->child("ensight")) {
    f.input.format = InputSpec::Format::Ensight;
    f.input.file = resolve(base, required_attr(*ens, "fileName", doc));
    if (const auto* v = optional_attr(*ens, "fixFVPyramids")) {
      f.input.fix_fv_pyramids = to_bool(*ens, *v, "fixFVPyramids", doc);
    }
    warn_ignored(*ens, "readFVMesh", doc);
    std::set<std::string> names;
    if (const auto* list = ens->child("variableList")) {
      for (const auto* v : list->children_named("variable")) {
        VariableMapping m{required_attr(*v, "CFSVarName", doc), required_attr(*v, "EnsightVarName", doc)};
        if (!names.insert(m.cfs_name).second) fail(*v, doc, "duplicate CFSVarName '" + m.cfs_name + "'");
        f.input.variables.push_back(std::move(m));
      }
    }
  } else if (const auto* native = file_element(*file)) {
    f.input.format = InputSpec::Format::Native;
    f.input.file = resolve(base, required_attr(*native, "fileName", doc));
  } else {
    fail(*file, doc, "requires an <ensight>, <hdf5> or <native> element");
  }
}

void parse_output(const XmlElement& e, FilterSpec& f, const fs::path& base, const std::string& doc) {
  std::string name = f.id + ".cfsd";
  if (const auto* out = e.child("outputFile")) {
    if (const auto* fe = file_element(*out)) {
      warn_ignored(*fe, "compressionLevel", doc);
      warn_ignored(*fe, "externalFiles", doc);
      if (const auto* ext = optional_attr(*fe, "extension")) name = f.id + "." + *ext;
      if (const auto* fn = optional_attr(*fe, "fileName")) name = *fn;
    }
  }
  f.output.path = resolve(base, name);
  const auto* save = e.child("saveResults");
  if (!save) fail(e, doc, "requires a <saveResults> block");
  std::set<std::string> seen;
  for (const auto* r : save->children_named("result")) {
    OutputResult res;
    res.name = required_attr(*r, "resultName", doc);
    res.line = r->line;
    if (!seen.insert(res.name).second) fail(*r, doc, "duplicate result '" + res.name + "'");
    if (const auto* list = r->child("regionList")) {
      res.all_regions = false;
      for (const auto* reg : list->children_named("region")) res.regions.push_back(required_attr(*reg, "name", doc));
      if (res.regions.empty()) fail(*list, doc, "lists no regions");
    }
    f.output.results.push_back(std::move(res));
  }
  if (f.output.results.empty()) fail(*save, doc, "lists no results");
}

void parse_single_result(const XmlElement& e, FilterSpec& f, const std::string& doc) {
  const auto* sr = e.child("singleResult");
  if (!sr) fail(e, doc, "requires a <singleResult> block");
  const auto* in = sr->child("inputQuantity");
  const auto* out = sr->child("outputQuantity");
  if (!in || !out) fail(*sr, doc, "requires <inputQuantity> and <outputQuantity>");
  f.input_quantity = required_attr(*in, "resultName", doc);
  f.output_quantity = required_attr(*out, "resultName", doc);
}

void parse_regions_and_target(const XmlElement& e, FilterSpec& f, const fs::path& base, const std::string& doc) {
  if (const auto* tm = e.child("targetMesh")) {
    const auto* fe = file_element(*tm);
    if (!fe) fail(*tm, doc, "requires an <hdf5> or <native> element");
    f.target_mesh = resolve(base, required_attr(*fe, "fileName", doc));
  }
  if (const auto* regions = e.child("regions")) {
    if (const auto* src = regions->child("sourceRegions")) {
      for (const auto* r : src->children_named("region")) f.source_regions.push_back(required_attr(*r, "name", doc));
    }
    if (const auto* tgt = regions->child("targetRegions")) {
      for (const auto* r : tgt->children_named("region")) f.target_regions.push_back(required_attr(*r, "name", doc));
    }
  }
}

void parse_rbf_settings(const XmlElement& e, FilterSpec& f, const std::string& doc) {
  const auto* s = e.child("RBF_Settings");
  if (!s) fail(e, doc, "requires <RBF_Settings>");
  f.rbf_fd.epsilon_scaling = to_double(*s, required_attr(*s, "epsilonScaling", doc), "epsilonScaling", doc);
  if (const auto* v = optional_attr(*s, "betaScaling")) f.rbf_fd.beta_scaling = to_double(*s, *v, "betaScaling", doc);
  if (const auto* v = optional_attr(*s, "kScaling")) f.rbf_fd.k_scaling = to_double(*s, *v, "kScaling", doc);
  if (const auto* v = optional_attr(*s, "logEps")) f.rbf_fd.log_eps = to_bool(*s, *v, "logEps", doc);
  if (const auto* v = optional_attr(*s, "stencilSize")) f.rbf_fd.stencil_size = to_count(*s, *v, "stencilSize", doc);
  if (!(f.rbf_fd.epsilon_scaling > 0.0)) fail(*s, doc, "epsilonScaling must be positive");
}

void parse_interpolation(const XmlElement& e, FilterSpec& f, const fs::path& base, const std::string& doc) {
  parse_single_result(e, f, doc);
  parse_regions_and_target(e, f, base, doc);
  if (f.kind == FilterKind::NearestNeighbour) {
    if (const auto* nn = e.child("IntSchemeNN")) {
      if (const auto* v = optional_attr(*nn, "interpolationExponent")) {
        f.shepard.exponent = to_double(*nn, *v, "interpolationExponent", doc);
      }
      if (const auto* v = optional_attr(*nn, "numNeighbours")) {
        f.shepard.neighbours = to_count(*nn, *v, "numNeighbours", doc);
      }
      if (const auto* v = optional_attr(*nn, "globalFactor")) {
        f.shepard.global_factor = to_double(*nn, *v, "globalFactor", doc);
      }
      if (f.shepard.neighbours == 0) fail(*nn, doc, "numNeighbours must be at least 1");
      if (f.shepard.exponent < 1.0 || f.shepard.exponent > 3.0) {
        logger()->warn("{} interpolationExponent {} lies outside [1, 3]", at(*nn, doc), f.shepard.exponent);
      }
    }
  } else if (f.kind == FilterKind::Rbf) {
    if (const auto* rbf = e.child("IntSchemeRBF")) {
      if (const auto* v = optional_attr(*rbf, "numNeighbours")) f.rbf.neighbours = to_count(*rbf, *v, "numNeighbours", doc);
      if (const auto* v = optional_attr(*rbf, "numNeighbours_weight")) {
        f.rbf.influence_points = to_count(*rbf, *v, "numNeighbours_weight", doc);
      }
      if (const auto* v = optional_attr(*rbf, "interpolationExponent")) {
        f.rbf.exponent = to_double(*rbf, *v, "interpolationExponent", doc);
      }
      if (const auto* v = optional_attr(*rbf, "globalFactor")) f.rbf.global_factor = to_double(*rbf, *v, "globalFactor", doc);
      if (rbf->attribute("useCGAL4RBF")) {
        logger()->warn("{} useCGAL4RBF is ignored; the built-in exact neighbour search is used", at(*rbf, doc));
      }
      if (f.rbf.neighbours == 0 || f.rbf.influence_points == 0) {
        fail(*rbf, doc, "numNeighbours and numNeighbours_weight must be positive");
      }
      if (f.rbf.influence_points > f.rbf.neighbours) {
        fail(*rbf, doc, "numNeighbours_weight must not exceed numNeighbours");
      }
    }
    if (const auto* u = e.child("useElemAsTarget")) {
      f.rbf.use_elem_as_target = !u->text.empty() && to_bool(*u, u->text, "useElemAsTarget", doc);
    }
    if (const auto* w = e.child("noSlipWall")) f.rbf.no_slip_wall = required_attr(*w, "name", doc);
  }
}

void parse_aeroacoustic(const XmlElement& e, FilterSpec& f, const fs::path& base, const std::string& doc) {
  parse_rbf_settings(e, f, doc);
  parse_regions_and_target(e, f, base, doc);
  if (const auto* s = e.child("sourceSum")) {
    if (!s->text.empty() && !to_bool(*s, s->text, "sourceSum", doc)) fail(*s, doc, "sourceSum 'false' is unsupported");
  }
  const auto* list = e.child("ResultList");
  if (!list) fail(e, doc, "requires a <ResultList> block");
  const auto* vel = list->child("velocity");
  if (!vel) fail(*list, doc, "requires <velocity>");
  f.velocity = required_attr(*vel, "resultName", doc);
  if (const auto* vort = list->child("vorticity")) {
    if (const auto* v = optional_attr(*vort, "resultName")) f.vorticity = *v;
  }
  if (const auto* rho = list->child("density")) {
    (void)rho;
    logger()->warn("{} <density> is accepted but not used by the source term", at(e, doc));
  }
  const auto* out = list->child("outputQuantity");
  if (!out) fail(*list, doc, "requires <outputQuantity>");
  f.output_quantity = required_attr(*out, "resultName", doc);
}

}  // namespace

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::MeshInput: return "meshInput";
    case FilterKind::MeshOutput: return "meshOutput";
    case FilterKind::TimeDeriv1: return "timeDeriv1";
    default: break;
  }
  for (const auto& t : kTypes) {
    if (t.kind == kind) return t.type;
  }
  return "unknown";
}

std::vector<std::string> FilterSpec::consumed() const {
  switch (kind) {
    case FilterKind::MeshInput: return {};
    case FilterKind::MeshOutput: {
      std::vector<std::string> out;
      for (const auto& r : output.results) out.push_back(r.name);
      return out;
    }
    case FilterKind::LambVector:
    case FilterKind::LighthillVector:
    case FilterKind::LighthillScalar:
      if (vorticity) return {velocity, *vorticity};
      return {velocity};
    default: return {input_quantity};
  }
}

std::vector<std::string> FilterSpec::produced() const {
  if (kind == FilterKind::MeshInput || kind == FilterKind::MeshOutput) return {};
  return {output_quantity};
}

bool FilterSpec::is_spatial_derivative() const {
  switch (kind) {
    case FilterKind::Gradient:
    case FilterKind::Divergence:
    case FilterKind::Curl:
    case FilterKind::LambVector:
    case FilterKind::LighthillVector:
    case FilterKind::LighthillScalar: return true;
    default: return false;
  }
}

std::string FilterSpec::where() const {
  return std::string(to_string(kind)) + " '" + id + "' (line " + std::to_string(line) + ")";
}

PipelineDocument parse_pipeline(const XmlElement& root, const fs::path& document_path) {
  const std::string doc = document_path.string();
  if (root.name != "cfsdat") fail(root, doc, "root element must be <cfsdat>");
  const auto pipelines = root.children_named("pipeline");
  if (pipelines.size() != 1) fail(root, doc, "must contain exactly one <pipeline>");
  const auto& pipe = *pipelines.front();

  PipelineDocument out;
  out.path = document_path;
  out.base_dir = document_path.parent_path();
  const fs::path& base = out.base_dir;
  bool have_steps = false;
  for (const auto& e : pipe.children) {
    if (e.name == "stepValueDefinition") {
      if (have_steps) fail(e, doc, "appears twice; exactly one is allowed");
      out.steps = parse_steps(e, doc);
      have_steps = true;
      continue;
    }
    FilterSpec f;
    f.line = e.line;
    f.id = required_attr(e, "id", doc);
    if (const auto* ids = e.attribute("inputFilterIds")) f.inputs = split_ids(*ids);
    if (e.name == "meshInput") {
      f.kind = FilterKind::MeshInput;
      if (!f.inputs.empty()) fail(e, doc, "must not have inputFilterIds");
      parse_input(e, f, base, doc);
    } else if (e.name == "meshOutput") {
      f.kind = FilterKind::MeshOutput;
      parse_output(e, f, base, doc);
    } else if (e.name == "timeDeriv1") {
      f.kind = FilterKind::TimeDeriv1;
      parse_single_result(e, f, doc);
    } else if (e.name == "interpolation" || e.name == "differentiation" || e.name == "aeroacoustic") {
      const auto& type = required_attr(e, "type", doc);
      const auto* t = std::find_if(std::begin(kTypes), std::end(kTypes),
                                   [&](const TypeName& tn) { return type == tn.type; });
      if (t == std::end(kTypes) || e.name != t->element) {
        fail(e, doc, "unknown filter type '" + type + "'");
      }
      f.kind = t->kind;
      if (e.name == "interpolation") {
        parse_interpolation(e, f, base, doc);
      } else if (e.name == "differentiation") {
        parse_rbf_settings(e, f, doc);
        parse_single_result(e, f, doc);
        parse_regions_and_target(e, f, base, doc);
      } else {
        parse_aeroacoustic(e, f, base, doc);
      }
    } else {
      fail(e, doc, "unknown filter type");
    }
    if (f.kind != FilterKind::MeshInput && f.inputs.empty()) fail(e, doc, "requires inputFilterIds");
    out.filters.push_back(std::move(f));
  }
  if (!have_steps) fail(pipe, doc, "is missing <stepValueDefinition>");
  return out;
}

PipelineDocument parse_pipeline_file(const fs::path& path) {
  return parse_pipeline(parse_xml_file(path), path);
}

PipelineDocument parse_pipeline_string(std::string_view xml, const fs::path& document_path) {
  return parse_pipeline(parse_xml(xml, document_path.string()), document_path);
}

PipelineGraph build_graph(PipelineDocument doc) {
  PipelineGraph g;
  const std::string name = doc.path.string();
  for (std::size_t i = 0; i < doc.filters.size(); ++i) {
    const auto& f = doc.filters[i];
    if (!g.index.emplace(f.id, i).second) {
      throw ValidationError(name + " line " + std::to_string(f.line) + ": duplicate filter id '" + f.id + "'");
    }
  }
  const auto n = doc.filters.size();
  std::vector<std::vector<std::size_t>> succ(n);
  std::vector<std::size_t> indegree(n, 0);
  std::size_t inputs = 0, outputs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = doc.filters[i];
    if (f.kind == FilterKind::MeshInput) ++inputs;
    if (f.kind == FilterKind::MeshOutput) ++outputs;
    std::set<std::string> seen;
    for (const auto& in : f.inputs) {
      if (!seen.insert(in).second) {
        throw ValidationError(name + ": " + f.where() + " lists input '" + in + "' twice");
      }
      const auto it = g.index.find(in);
      if (it == g.index.end()) {
        throw ValidationError(name + ": " + f.where() + " references unknown filter '" + in +
                              "' in inputFilterIds");
      }
      if (doc.filters[it->second].kind == FilterKind::MeshOutput) {
        throw ValidationError(name + ": " + f.where() + " reads from meshOutput '" + in +
                              "'; outputs must be terminal");
      }
      succ[it->second].push_back(i);
      ++indegree[i];
    }
  }
  if (inputs == 0) throw ValidationError(name + ": pipeline has no meshInput");
  if (outputs == 0) throw ValidationError(name + ": pipeline has no meshOutput");

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  auto remaining = indegree;
  while (!ready.empty()) {
    const auto i = ready.top();
    ready.pop();
    g.order.push_back(i);
    for (const auto s : succ[i]) {
      if (--remaining[s] == 0) ready.push(s);
    }
  }
  if (g.order.size() != n) {
    // Walk predecessors inside the unresolved set until a node repeats.
    std::size_t start = 0;
    while (remaining[start] == 0) ++start;
    std::vector<std::size_t> path;
    std::vector<int> pos(n, -1);
    std::size_t cur = start;
    while (pos[cur] < 0) {
      pos[cur] = static_cast<int>(path.size());
      path.push_back(cur);
      for (const auto& in : doc.filters[cur].inputs) {
        const auto p = g.index.at(in);
        if (remaining[p] != 0) {
          cur = p;
          break;
        }
      }
    }
    std::string cycle;
    std::vector<std::size_t> loop(path.begin() + pos[cur], path.end());
    // Predecessor order reversed is data-flow order; start the report at
    // the node the walk entered the cycle from.
    std::reverse(loop.begin(), loop.end());
    std::rotate(loop.rbegin(), loop.rbegin() + 1, loop.rend());
    for (const auto i : loop) cycle += doc.filters[i].id + " -> ";
    cycle += doc.filters[loop.front()].id;
    throw ValidationError(name + ": cycle in filter graph: " + cycle);
  }
  g.doc = std::move(doc);
  g.shapes.resize(n);
  return g;
}

std::optional<int> reserved_components(std::string_view name) {
  static const std::set<std::string_view> vectors = {
      "acouVelocity",        "acoutIntensity",        "fluidMechVelocity",      "meanFluidMechVelocity",
      "fluidMechVorticity", "fluidMechGradPressure", "acouDivLighthillTensor"};
  static const std::set<std::string_view> scalars = {
      "acouPressure",     "acouPotential", "fluidMechPressure", "fluidMechDensity",
      "acouRhsLoad",      "acouRhsLoadP",  "vortexRhsLoad"};
  if (vectors.count(name)) return 3;
  if (scalars.count(name)) return 1;
  return std::nullopt;
}

namespace {

std::vector<std::string> output_regions(const FilterSpec& f) {
  if (!f.target_regions.empty()) return f.target_regions;
  if (f.kind == FilterKind::Node2Cell || f.kind == FilterKind::Cell2Node) {
    if (!f.source_regions.empty()) return f.source_regions;
  }
  return {};
}

}  // namespace

void check_quantities(PipelineGraph& graph, const InputCatalog& catalog, std::size_t num_steps) {
  const std::string doc = graph.doc.path.string();
  for (const auto i : graph.order) {
    const auto& f = graph.doc.filters[i];
    auto& shapes = graph.shapes[i];
    if (f.kind == FilterKind::MeshInput) {
      const auto it = catalog.find(f.id);
      if (it != catalog.end()) shapes = it->second;
      continue;
    }
    auto lookup = [&](const std::string& q) -> QuantityShape {
      const QuantityShape* found = nullptr;
      std::string producer;
      for (const auto& in : f.inputs) {
        const auto& s = graph.shapes[graph.index.at(in)];
        const auto it = s.find(q);
        if (it == s.end()) continue;
        if (found) {
          throw ValidationError(doc + ": " + f.where() + ": quantity '" + q + "' is produced by both '" + producer +
                                "' and '" + in + "'");
        }
        found = &it->second;
        producer = in;
      }
      if (!found) {
        std::string list;
        for (const auto& in : f.inputs) list += (list.empty() ? "" : ", ") + in;
        throw ValidationError(doc + ": " + f.where() + ": quantity '" + q +
                              "' is produced by none of its input filters (" + list + ")");
      }
      return *found;
    };
    auto reject = [&](const std::string& why) { throw ValidationError(doc + ": " + f.where() + ": " + why); };

    if (f.kind == FilterKind::MeshOutput) {
      for (const auto& r : f.output.results) {
        const auto shape = lookup(r.name);
        if (!r.all_regions && shape.regions) {
          for (const auto& reg : r.regions) {
            if (std::find(shape.regions->begin(), shape.regions->end(), reg) == shape.regions->end()) {
              reject("result '" + r.name + "' is not defined on region '" + reg + "'");
            }
          }
        }
        if (const auto expected = reserved_components(r.name); expected && *expected != shape.components) {
          logger()->warn("{}: result '{}' is a reserved solver name for {} data but has {} components", f.where(),
                         r.name, *expected == 3 ? "vector" : "scalar", shape.components);
        }
        if (r.name.find("RhsLoad") != std::string::npos && shape.defined_on != DefinedOn::Node) {
          logger()->warn("{}: result '{}' is a reserved solver name for NODE data but is defined on CELL",
                         f.where(), r.name);
        }
      }
      continue;
    }

    QuantityShape out;
    if (f.kind == FilterKind::LambVector || f.kind == FilterKind::LighthillVector ||
        f.kind == FilterKind::LighthillScalar) {
      const auto u = lookup(f.velocity);
      if (u.domain != AnalysisDomain::Time) reject("FREQUENCY data is not supported");
      if (u.components != 3 || u.defined_on != DefinedOn::Node) reject("velocity '" + f.velocity + "' must be a NODE vector");
      if (f.vorticity) {
        const auto w = lookup(*f.vorticity);
        if (w.domain != AnalysisDomain::Time) reject("FREQUENCY data is not supported");
        if (w.components != 3 || w.defined_on != DefinedOn::Node) {
          reject("vorticity '" + *f.vorticity + "' must be a NODE vector");
        }
      }
      out = {DefinedOn::Node, f.kind == FilterKind::LighthillScalar ? 1 : 3, AnalysisDomain::Time, std::nullopt};
      if (!f.target_regions.empty()) out.regions = f.target_regions;
      shapes[f.output_quantity] = out;
      continue;
    }

    const auto in = lookup(f.input_quantity);
    out = in;
    out.regions.reset();
    switch (f.kind) {
      case FilterKind::Node2Cell:
        if (in.defined_on != DefinedOn::Node) reject("input '" + f.input_quantity + "' must be NODE data");
        out.defined_on = DefinedOn::Cell;
        break;
      case FilterKind::Cell2Node:
      case FilterKind::ConservativeCellCentroid:
      case FilterKind::ConservativeCutCell:
        if (in.defined_on != DefinedOn::Cell) reject("input '" + f.input_quantity + "' must be CELL data");
        out.defined_on = DefinedOn::Node;
        break;
      case FilterKind::NearestNeighbour: break;
      case FilterKind::Rbf:
        if (in.defined_on == DefinedOn::Cell && !f.rbf.use_elem_as_target) {
          reject("CELL input '" + f.input_quantity + "' can only be interpolated to cell centroids (useElemAsTarget)");
        }
        out.defined_on = f.rbf.use_elem_as_target ? DefinedOn::Cell : DefinedOn::Node;
        break;
      case FilterKind::Gradient:
      case FilterKind::Divergence:
      case FilterKind::Curl: {
        if (in.domain != AnalysisDomain::Time) reject("FREQUENCY data is not supported");
        if (in.defined_on != DefinedOn::Node) reject("input '" + f.input_quantity + "' must be NODE data");
        const int want = f.kind == FilterKind::Gradient ? 1 : 3;
        if (in.components != want) {
          reject("input '" + f.input_quantity + "' must be a " + (want == 1 ? "scalar" : "vector"));
        }
        out.components = f.kind == FilterKind::Divergence ? 1 : 3;
        break;
      }
      case FilterKind::TimeDeriv1:
        if (in.domain != AnalysisDomain::Time) reject("FREQUENCY data is not supported");
        if (num_steps < 5) reject("timeDeriv1 requires at least 5 steps (numSteps is " + std::to_string(num_steps) + ")");
        out.regions = in.regions;
        break;
      default: break;
    }
    if (f.kind != FilterKind::TimeDeriv1) {
      auto regions = output_regions(f);
      if (!regions.empty()) {
        out.regions = std::move(regions);
      } else if (!f.target_mesh && in.regions && f.source_regions.empty()) {
        out.regions = in.regions;
      }
    }
    shapes[f.output_quantity] = out;
  }
}

}  // namespace fieldpipe
