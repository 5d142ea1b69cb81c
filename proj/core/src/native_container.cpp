#include "fieldpipe/container.hpp"

#include "fieldpipe/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace fieldpipe {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

template <typename T>
void to_little_endian(std::vector<T>& v) {
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& x : v) {
      unsigned char b[sizeof(T)];
      std::memcpy(b, &x, sizeof(T));
      std::reverse(b, b + sizeof(T));
      std::memcpy(&x, b, sizeof(T));
    }
  }
}

template <typename T>
void write_binary(const fs::path& path, std::vector<T> data) {
  to_little_endian(data);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(T)));
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

template <typename T>
std::vector<T> read_binary(const fs::path& path, std::size_t count, const std::string& expectation) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw IoError("cannot read '" + path.string() + "': " + ec.message());
  if (size != count * sizeof(T)) {
    throw IoError("'" + path.string() + "': expected " + expectation + " = " +
                  std::to_string(count * sizeof(T)) + " bytes, found " + std::to_string(size));
  }
  std::vector<T> data(count);
  std::ifstream in(path, std::ios::binary);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read failed for '" + path.string() + "'");
  to_little_endian(data);
  return data;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

std::string file_token(const std::string& name) {
  std::string out = name;
  for (auto& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

fs::path step_file(const fs::path& root, const std::string& quantity, std::size_t index) {
  return root / "results" / file_token(quantity) / ("step_" + std::to_string(index) + ".bin");
}

void write_mesh(const fs::path& root, const Mesh& mesh) {
  write_binary(root / "nodes.bin",
               std::vector<double>(mesh.coordinates().begin(), mesh.coordinates().end()));
  json regions = json::array();
  std::set<std::string> used;
  for (const auto& r : mesh.regions()) {
    json blocks = json::array();
    for (std::size_t b = 0; b < r.blocks.size(); ++b) {
      std::string file = "conn_" + file_token(r.name) + "_" + std::to_string(b) + ".bin";
      for (int k = 1; !used.insert(file).second; ++k) {
        file = "conn_" + file_token(r.name) + "~" + std::to_string(k) + "_" + std::to_string(b) + ".bin";
      }
      write_binary(root / file, r.blocks[b].connectivity);
      blocks.push_back({{"type", std::string(to_string(r.blocks[b].type))},
                        {"element_count", r.blocks[b].size()},
                        {"file", file}});
    }
    regions.push_back({{"name", r.name}, {"blocks", blocks}});
  }
  json doc = {{"format_version", kFormatVersion},
              {"node_count", mesh.node_count()},
              {"nodes_file", "nodes.bin"},
              {"regions", regions}};
  write_text(root / "mesh.json", doc.dump(2) + "\n");
}

json manifest_to_json(const Manifest& m) {
  json steps = json::array();
  for (const auto& s : m.steps) steps.push_back({{"index", s.index}, {"value", s.value}});
  json quantities = json::array();
  for (const auto& q : m.quantities) {
    json regions = json::array();
    for (std::size_t i = 0; i < q.quantity.regions.size(); ++i) {
      regions.push_back({{"name", q.quantity.regions[i]}, {"entity_count", q.entity_counts[i]}});
    }
    quantities.push_back({{"name", q.quantity.name},
                          {"defined_on", std::string(to_string(q.quantity.defined_on))},
                          {"components", q.quantity.components},
                          {"value_kind", std::string(to_string(q.quantity.value_kind()))},
                          {"regions", regions},
                          {"steps", q.steps}});
  }
  return {{"format_version", m.format_version},
          {"analysis", std::string(to_string(m.analysis))},
          {"steps", steps},
          {"quantities", quantities}};
}

template <typename T>
T get_field(const json& j, const char* key, const fs::path& file) {
  if (!j.is_object() || !j.contains(key)) {
    throw IoError("'" + file.string() + "': missing key '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError("'" + file.string() + "': bad value for '" + key + "': " + e.what());
  }
}

Manifest manifest_from_json(const json& j, const fs::path& file) {
  Manifest m;
  m.format_version = get_field<int>(j, "format_version", file);
  if (m.format_version != kFormatVersion) {
    throw IoError("'" + file.string() + "': unknown format_version " +
                  std::to_string(m.format_version));
  }
  const auto analysis = analysis_domain_from_string(get_field<std::string>(j, "analysis", file));
  if (!analysis) throw IoError("'" + file.string() + "': analysis must be TIME or FREQUENCY");
  m.analysis = *analysis;
  for (const auto& s : get_field<json>(j, "steps", file)) {
    m.steps.push_back({get_field<std::size_t>(s, "index", file), get_field<double>(s, "value", file)});
  }
  for (const auto& q : get_field<json>(j, "quantities", file)) {
    QuantityEntry e;
    e.quantity.name = get_field<std::string>(q, "name", file);
    const auto on = defined_on_from_string(get_field<std::string>(q, "defined_on", file));
    if (!on) throw IoError("'" + file.string() + "': bad defined_on for '" + e.quantity.name + "'");
    e.quantity.defined_on = *on;
    e.quantity.components = get_field<int>(q, "components", file);
    e.quantity.domain = m.analysis;
    const auto kind = value_kind_from_string(get_field<std::string>(q, "value_kind", file));
    if (!kind || *kind != e.quantity.value_kind()) {
      throw IoError("'" + file.string() + "': value_kind of '" + e.quantity.name +
                    "' inconsistent with analysis " + std::string(to_string(m.analysis)));
    }
    for (const auto& r : get_field<json>(q, "regions", file)) {
      e.quantity.regions.push_back(get_field<std::string>(r, "name", file));
      e.entity_counts.push_back(get_field<std::size_t>(r, "entity_count", file));
    }
    e.steps = get_field<std::vector<std::size_t>>(q, "steps", file);
    m.quantities.push_back(std::move(e));
  }
  try {
    m.validate();
  } catch (const ValidationError& err) {
    throw ValidationError("'" + file.string() + "': " + err.what());
  }
  return m;
}

std::shared_ptr<const Mesh> load_mesh(const fs::path& root) {
  const auto mesh_file = root / "mesh.json";
  if (!fs::exists(mesh_file)) throw IoError("missing '" + mesh_file.string() + "'");
  const json doc = read_json(mesh_file);
  const auto version = get_field<int>(doc, "format_version", mesh_file);
  if (version != kFormatVersion) {
    throw IoError("'" + mesh_file.string() + "': unknown format_version " + std::to_string(version));
  }
  const auto n = get_field<std::size_t>(doc, "node_count", mesh_file);
  auto coords = read_binary<double>(root / get_field<std::string>(doc, "nodes_file", mesh_file),
                                    3 * n, "3*N*8 (N=" + std::to_string(n) + ")");
  std::vector<Region> regions;
  for (const auto& r : get_field<json>(doc, "regions", mesh_file)) {
    Region region;
    region.name = get_field<std::string>(r, "name", mesh_file);
    for (const auto& b : get_field<json>(r, "blocks", mesh_file)) {
      ElementBlock block;
      const auto type_name = get_field<std::string>(b, "type", mesh_file);
      const auto type = element_type_from_string(type_name);
      if (!type) throw IoError("'" + mesh_file.string() + "': unknown element type " + type_name);
      block.type = *type;
      const auto count = get_field<std::size_t>(b, "element_count", mesh_file);
      const auto npe = static_cast<std::size_t>(node_count(block.type));
      block.connectivity = read_binary<std::uint32_t>(
          root / get_field<std::string>(b, "file", mesh_file), count * npe,
          std::to_string(npe) + "*E*4 (E=" + std::to_string(count) + ")");
      region.blocks.push_back(std::move(block));
    }
    regions.push_back(std::move(region));
  }
  try {
    return std::make_shared<const Mesh>(std::move(coords), std::move(regions));
  } catch (const ValidationError& e) {
    throw ValidationError("'" + mesh_file.string() + "': " + e.what());
  }
}

void check_entity_counts(const QuantityEntry& q, const Mesh& mesh, const fs::path& file) {
  for (std::size_t i = 0; i < q.quantity.regions.size(); ++i) {
    const auto r = mesh.find_region(q.quantity.regions[i]);
    if (!r) {
      throw ValidationError("'" + file.string() + "': quantity '" + q.quantity.name +
                            "' references unknown region '" + q.quantity.regions[i] + "'");
    }
    const auto expected = entity_count(mesh, *r, q.quantity.defined_on);
    if (q.entity_counts[i] != expected) {
      throw ValidationError("'" + file.string() + "': quantity '" + q.quantity.name + "' region '" +
                            q.quantity.regions[i] + "' entity_count " +
                            std::to_string(q.entity_counts[i]) + " but mesh has " +
                            std::to_string(expected));
    }
  }
}

void prepare_directory(const fs::path& root) {
  if (fs::exists(root)) {
    const bool is_container = fs::exists(root / "mesh.json") || fs::exists(root / "manifest.json");
    const bool empty = fs::is_directory(root) && fs::is_empty(root);
    if (!is_container && !empty) {
      throw IoError("refusing to overwrite '" + root.string() + "': not a native container");
    }
    fs::remove_all(root);
  }
  std::error_code ec;
  fs::create_directories(root / "results", ec);
  if (ec) throw IoError("cannot create '" + root.string() + "': " + ec.message());
}

QuantityEntry entry_for(const FieldQuantity& q, const Mesh& mesh) {
  QuantityEntry e;
  e.quantity = q;
  for (const auto& name : q.regions) {
    e.entity_counts.push_back(entity_count(mesh, mesh.region_index(name), q.defined_on));
  }
  return e;
}

}  // namespace

void Manifest::validate() const {
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (!(steps[i].value > steps[i - 1].value)) {
      throw ValidationError("step values must be strictly increasing (step " +
                            std::to_string(steps[i].index) + ")");
    }
  }
  std::set<std::size_t> indices;
  for (const auto& s : steps) {
    if (!indices.insert(s.index).second) {
      throw ValidationError("duplicate step index " + std::to_string(s.index));
    }
  }
  std::set<std::string> names;
  for (const auto& q : quantities) {
    q.quantity.validate();
    if (!names.insert(q.quantity.name).second) {
      throw ValidationError("duplicate quantity name '" + q.quantity.name + "'");
    }
    if (q.quantity.domain != analysis) {
      throw ValidationError("quantity '" + q.quantity.name + "' domain differs from analysis");
    }
    if (q.entity_counts.size() != q.quantity.regions.size()) {
      throw ValidationError("quantity '" + q.quantity.name + "' entity counts do not match regions");
    }
    for (auto s : q.steps) {
      if (!indices.contains(s)) {
        throw ValidationError("quantity '" + q.quantity.name + "' lists unknown step " +
                              std::to_string(s));
      }
    }
  }
}

const QuantityEntry* Manifest::find(std::string_view name) const {
  for (const auto& q : quantities) {
    if (q.quantity.name == name) return &q;
  }
  return nullptr;
}

const StepEntry* Manifest::find_step(std::size_t index) const {
  for (const auto& s : steps) {
    if (s.index == index) return &s;
  }
  return nullptr;
}

NativeReader::NativeReader(fs::path root) : root_(std::move(root)) {
  if (!fs::is_directory(root_)) throw IoError("'" + root_.string() + "' is not a container directory");
  const auto manifest_file = root_ / "manifest.json";
  if (!fs::exists(manifest_file)) throw IoError("missing '" + manifest_file.string() + "'");
  manifest_ = manifest_from_json(read_json(manifest_file), manifest_file);
  mesh_ = load_mesh(root_);
  for (const auto& q : manifest_.quantities) check_entity_counts(q, *mesh_, manifest_file);
}

FieldStep NativeReader::read_step(std::string_view quantity, std::size_t step_index) const {
  const auto* q = manifest_.find(quantity);
  if (!q) throw ValidationError("container has no quantity '" + std::string(quantity) + "'");
  const auto* step = manifest_.find_step(step_index);
  if (!step || !std::binary_search(q->steps.begin(), q->steps.end(), step_index)) {
    throw ValidationError("quantity '" + std::string(quantity) + "' has no step " +
                          std::to_string(step_index));
  }
  const auto lanes = static_cast<std::size_t>(q->quantity.lanes());
  std::size_t total = 0;
  for (auto c : q->entity_counts) total += c * lanes;
  const auto file = step_file(root_, q->quantity.name, step_index);
  auto data = read_binary<double>(file, total, "entities*lanes*8 (" + std::to_string(total) + " values)");

  FieldStep s;
  s.quantity = q->quantity;
  s.step_index = step_index;
  s.step_value = step->value;
  auto it = data.begin();
  for (auto c : q->entity_counts) {
    const auto n = static_cast<std::ptrdiff_t>(c * lanes);
    s.values.emplace_back(it, it + n);
    it += n;
  }
  return s;
}

std::unique_ptr<NativeReader> read_native(const fs::path& root) {
  return std::make_unique<NativeReader>(root);
}

std::shared_ptr<const Mesh> read_target_mesh(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("'" + root.string() + "' is not a container directory");
  return load_mesh(root);
}

Manifest read_manifest(const fs::path& root) {
  const auto manifest_file = root / "manifest.json";
  if (!fs::exists(manifest_file)) throw IoError("missing '" + manifest_file.string() + "'");
  return manifest_from_json(read_json(manifest_file), manifest_file);
}

NativeWriter::NativeWriter(fs::path root, std::shared_ptr<const Mesh> mesh, AnalysisDomain analysis)
    : root_(std::move(root)), mesh_(std::move(mesh)) {
  manifest_.analysis = analysis;
  prepare_directory(root_);
  write_mesh(root_, *mesh_);
  write_manifest();
}

void NativeWriter::declare(const FieldQuantity& quantity) {
  quantity.validate();
  if (quantity.domain != manifest_.analysis) {
    throw ValidationError("quantity '" + quantity.name + "' is " +
                          std::string(to_string(quantity.domain)) + " data but the container is " +
                          std::string(to_string(manifest_.analysis)));
  }
  if (manifest_.find(quantity.name)) {
    throw ValidationError("duplicate quantity name '" + quantity.name + "'");
  }
  manifest_.quantities.push_back(entry_for(quantity, *mesh_));
  fs::create_directories(root_ / "results" / file_token(quantity.name));
  write_manifest();
}

void NativeWriter::write_step(std::size_t index, double value, std::span<const FieldStep> results) {
  const auto* existing = manifest_.find_step(index);
  if (existing) {
    if (existing->value != value) {
      throw ValidationError("step " + std::to_string(index) + " already written with value " +
                            std::to_string(existing->value));
    }
  } else if (!manifest_.steps.empty()) {
    const auto& last = manifest_.steps.back();
    if (index <= last.index || !(value > last.value)) {
      throw ValidationError("step " + std::to_string(index) + " (value " + std::to_string(value) +
                            ") does not follow step " + std::to_string(last.index));
    }
  }
  for (const auto& r : results) {
    auto it = std::find_if(manifest_.quantities.begin(), manifest_.quantities.end(),
                           [&](const QuantityEntry& q) { return q.quantity.name == r.quantity.name; });
    if (it == manifest_.quantities.end()) {
      throw ValidationError("quantity '" + r.quantity.name + "' was not declared");
    }
    if (it->quantity != r.quantity) {
      throw ValidationError("quantity '" + r.quantity.name + "' does not match its declaration");
    }
    if (!it->steps.empty() && it->steps.back() >= index) {
      throw ValidationError("quantity '" + r.quantity.name + "' already has step " +
                            std::to_string(it->steps.back()));
    }
    r.check_against(*mesh_);
  }
  for (const auto& r : results) {
    std::vector<double> data;
    for (const auto& v : r.values) data.insert(data.end(), v.begin(), v.end());
    write_binary(step_file(root_, r.quantity.name, index), std::move(data));
  }
  if (!existing) manifest_.steps.push_back({index, value});
  for (const auto& r : results) {
    for (auto& q : manifest_.quantities) {
      if (q.quantity.name == r.quantity.name) q.steps.push_back(index);
    }
  }
  write_manifest();
}

void NativeWriter::write_manifest() const {
  write_text(root_ / "manifest.json", manifest_to_json(manifest_).dump(2) + "\n");
}

void write_native(const fs::path& root, const Mesh& mesh, const Manifest& manifest,
                  std::span<const FieldStep> steps) {
  Manifest m = manifest;
  for (auto& q : m.quantities) {
    check_entity_counts(q, mesh, root / "manifest.json");
    q.steps.clear();
  }
  for (const auto& s : steps) {
    auto it = std::find_if(m.quantities.begin(), m.quantities.end(),
                           [&](const QuantityEntry& q) { return q.quantity.name == s.quantity.name; });
    if (it == m.quantities.end()) {
      throw ValidationError("step data for undeclared quantity '" + s.quantity.name + "'");
    }
    if (it->quantity != s.quantity) {
      throw ValidationError("step data for '" + s.quantity.name + "' does not match the manifest");
    }
    const auto* entry = m.find_step(s.step_index);
    if (!entry) {
      throw ValidationError("step index " + std::to_string(s.step_index) + " not in manifest");
    }
    if (entry->value != s.step_value) {
      throw ValidationError("step " + std::to_string(s.step_index) + " value differs from manifest");
    }
    s.check_against(mesh);
    it->steps.push_back(s.step_index);
  }
  for (auto& q : m.quantities) {
    std::sort(q.steps.begin(), q.steps.end());
    if (std::adjacent_find(q.steps.begin(), q.steps.end()) != q.steps.end()) {
      throw ValidationError("duplicate step data for quantity '" + q.quantity.name + "'");
    }
  }
  m.validate();

  prepare_directory(root);
  write_mesh(root, mesh);
  for (const auto& q : m.quantities) fs::create_directories(root / "results" / file_token(q.quantity.name));
  for (const auto& s : steps) {
    std::vector<double> data;
    for (const auto& v : s.values) data.insert(data.end(), v.begin(), v.end());
    write_binary(step_file(root, s.quantity.name, s.step_index), std::move(data));
  }
  write_text(root / "manifest.json", manifest_to_json(m).dump(2) + "\n");
}

void write_mesh_only(const fs::path& root, const Mesh& mesh, AnalysisDomain analysis) {
  Manifest m;
  m.analysis = analysis;
  write_native(root, mesh, m, {});
}

}  // namespace fieldpipe
