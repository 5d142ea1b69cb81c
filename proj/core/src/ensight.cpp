#include "fieldpipe/ensight.hpp"

#include "fieldpipe/error.hpp"
#include "fieldpipe/log.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace fieldpipe {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

bool is_integer(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open Ensight file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void reject_binary(const std::string& content, const fs::path& path) {
  const auto head = lower(content.substr(0, std::min<std::size_t>(80, content.size())));
  if (head.find("binary") != std::string::npos) {
    throw IoError("'" + path.string() + "': binary Ensight files are not supported (ASCII only)");
  }
}

// Line/token cursor over an ASCII Ensight file.
class Cursor {
 public:
  Cursor(std::string text, fs::path path) : text_(std::move(text)), path_(std::move(path)) {}

  bool at_end() {
    skip_blank_lines();
    return pos_ >= text_.size();
  }

  std::string line() {
    if (mid_line_) finish_line();
    if (pos_ >= text_.size()) fail("unexpected end of file");
    const auto nl = text_.find('\n', pos_);
    const auto end = nl == std::string::npos ? text_.size() : nl;
    std::string out = text_.substr(pos_, end - pos_);
    if (!out.empty() && out.back() == '\r') out.pop_back();
    pos_ = nl == std::string::npos ? text_.size() : nl + 1;
    ++line_no_;
    return out;
  }

  // Next non-empty line, trimmed.
  std::string content_line() {
    skip_blank_lines();
    return trim(line());
  }

  std::string_view token() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') {
        ++line_no_;
        mid_line_ = false;
      }
      ++pos_;
    }
    if (pos_ >= text_.size()) fail("unexpected end of file");
    const auto b = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    mid_line_ = true;
    return std::string_view(text_).substr(b, pos_ - b);
  }

  double number() {
    const auto t = token();
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
      fail("expected a number, found '" + std::string(t) + "'");
    }
    return v;
  }

  long integer() {
    const auto t = token();
    long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
      fail("expected an integer, found '" + std::string(t) + "'");
    }
    return v;
  }

  std::size_t count() {
    const long v = integer();
    if (v < 0) fail("negative count");
    return static_cast<std::size_t>(v);
  }

  // Peeks the next non-empty line without consuming it.
  std::string peek_line() {
    const auto save_pos = pos_;
    const auto save_line = line_no_;
    const auto save_mid = mid_line_;
    std::string out = at_end() ? std::string() : content_line();
    pos_ = save_pos;
    line_no_ = save_line;
    mid_line_ = save_mid;
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw IoError("'" + path_.string() + "' line " + std::to_string(line_no_ + 1) + ": " + what);
  }

 private:
  void finish_line() {
    const auto nl = text_.find('\n', pos_);
    pos_ = nl == std::string::npos ? text_.size() : nl + 1;
    ++line_no_;
    mid_line_ = false;
  }

  void skip_blank_lines() {
    if (mid_line_) finish_line();
    while (pos_ < text_.size()) {
      const auto nl = text_.find('\n', pos_);
      const auto end = nl == std::string::npos ? text_.size() : nl;
      if (!trim(std::string_view(text_).substr(pos_, end - pos_)).empty()) return;
      pos_ = nl == std::string::npos ? text_.size() : nl + 1;
      ++line_no_;
    }
  }

  std::string text_;
  fs::path path_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
  bool mid_line_ = false;
};

std::optional<ElementType> ensight_element(const std::string& keyword) {
  static const std::map<std::string, ElementType> table = {
      {"tria3", ElementType::Tria3},   {"quad4", ElementType::Quad4},
      {"tetra4", ElementType::Tetra4}, {"pyramid5", ElementType::Pyramid5},
      {"penta6", ElementType::Penta6}, {"hexa8", ElementType::Hexa8}};
  const auto it = table.find(keyword);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

bool ids_present(const std::string& mode) { return mode == "given" || mode == "ignore"; }

}  // namespace

std::string sanitize_part_name(std::string_view description) {
  std::string out = trim(description);
  std::replace(out.begin(), out.end(), ' ', '_');
  return out;
}

fs::path EnsightCase::resolve(const std::string& pattern, std::size_t step) const {
  std::string name = pattern;
  const auto first = name.find('*');
  if (first != std::string::npos) {
    auto run_end = name.find_first_not_of('*', first);
    if (run_end == std::string::npos) run_end = name.size();
    const auto width = run_end - first;
    const long number = step < filename_numbers.size() ? filename_numbers[step] : static_cast<long>(step);
    std::string digits = std::to_string(number);
    if (digits.size() > width) {
      throw IoError("'" + case_path.string() + "': filename number " + digits +
                    " does not fit wildcard width " + std::to_string(width) + " in '" + pattern + "'");
    }
    digits.insert(0, width - digits.size(), '0');
    name.replace(first, width, digits);
  }
  return case_path.parent_path() / name;
}

const EnsightVariable* EnsightCase::find(std::string_view description) const {
  for (const auto& v : variables) {
    if (v.description == description) return &v;
  }
  return nullptr;
}

EnsightCase parse_ensight_case(const fs::path& case_path) {
  const std::string text = read_file(case_path);
  EnsightCase c;
  c.case_path = case_path;
  std::istringstream in(text);
  std::string section;
  std::string pending_key;
  bool have_time = false;
  long start_number = 0, increment = 1;
  bool explicit_numbers = false;
  std::size_t line_no = 0;

  auto fail = [&](const std::string& what) {
    throw IoError("'" + case_path.string() + "' line " + std::to_string(line_no) + ": " + what);
  };

  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      const auto key = lower(line);
      if (key == "format" || key == "geometry" || key == "variable" || key == "time" || key == "file") {
        section = key;
        pending_key.clear();
        continue;
      }
      // Continuation of a multi-line number list.
      if (pending_key == "filename numbers") {
        for (const auto& t : split_ws(line)) c.filename_numbers.push_back(std::stol(t));
      } else if (pending_key == "time values") {
        for (const auto& t : split_ws(line)) c.time_values.push_back(std::stod(t));
      } else {
        fail("unexpected line '" + line + "'");
      }
      continue;
    }
    const std::string key = lower(trim(line.substr(0, colon)));
    const std::string value = trim(line.substr(colon + 1));
    pending_key.clear();
    if (section == "format") {
      if (key == "type" && lower(value).find("gold") == std::string::npos) {
        fail("only 'ensight gold' case files are supported");
      }
    } else if (section == "geometry") {
      if (key == "model") {
        auto toks = split_ws(value);
        while (toks.size() > 1 && is_integer(toks.front())) toks.erase(toks.begin());
        if (toks.empty()) fail("model line without filename");
        c.geometry_pattern = toks.front();
      }
    } else if (section == "variable") {
      EnsightVariable v;
      if (key == "scalar per node") {
        v = {"", "", DefinedOn::Node, 1};
      } else if (key == "vector per node") {
        v = {"", "", DefinedOn::Node, 3};
      } else if (key == "scalar per element") {
        v = {"", "", DefinedOn::Cell, 1};
      } else if (key == "vector per element") {
        v = {"", "", DefinedOn::Cell, 3};
      } else {
        logger()->debug("Ensight variable kind '{}' ignored", key);
        continue;
      }
      auto toks = split_ws(value);
      if (toks.size() < 2) fail("variable line needs a description and a filename");
      v.file_pattern = toks.back();
      v.description = toks[toks.size() - 2];
      c.variables.push_back(std::move(v));
    } else if (section == "time") {
      if (key == "time set") {
        if (have_time) fail("only a single time set is supported");
        have_time = true;
      } else if (key == "number of steps") {
        c.step_count = static_cast<std::size_t>(std::stoul(value));
      } else if (key == "filename start number") {
        start_number = std::stol(value);
      } else if (key == "filename increment") {
        increment = std::stol(value);
      } else if (key == "filename numbers") {
        explicit_numbers = true;
        for (const auto& t : split_ws(value)) c.filename_numbers.push_back(std::stol(t));
        pending_key = key;
      } else if (key == "time values") {
        for (const auto& t : split_ws(value)) c.time_values.push_back(std::stod(t));
        pending_key = key;
      }
    }
  }
  if (c.geometry_pattern.empty()) fail("no geometry model line");
  if (!have_time) {
    c.step_count = 1;
    c.time_values = {0.0};
  }
  if (!explicit_numbers) {
    c.filename_numbers.clear();
    for (std::size_t i = 0; i < c.step_count; ++i) {
      c.filename_numbers.push_back(start_number + increment * static_cast<long>(i));
    }
  }
  if (c.time_values.size() != c.step_count) {
    throw IoError("'" + case_path.string() + "': " + std::to_string(c.time_values.size()) +
                  " time values for " + std::to_string(c.step_count) + " steps");
  }
  if (c.filename_numbers.size() != c.step_count) {
    throw IoError("'" + case_path.string() + "': " + std::to_string(c.filename_numbers.size()) +
                  " filename numbers for " + std::to_string(c.step_count) + " steps");
  }
  // Wildcard widths must hold every filename number.
  for (std::size_t s = 0; s < c.step_count; ++s) {
    for (const auto& v : c.variables) (void)c.resolve(v.file_pattern, s);
  }
  return c;
}

EnsightReader::EnsightReader(const fs::path& case_path, VariableMap map)
    : case_(parse_ensight_case(case_path)), map_(std::move(map)) {
  if (case_.geometry_pattern.find('*') != std::string::npos) {
    logger()->warn("Ensight geometry '{}' is time-dependent; using the first step's geometry",
                   case_.geometry_pattern);
  }
  const auto geo_path = case_.resolve(case_.geometry_pattern, 0);
  std::string text = read_file(geo_path);
  reject_binary(text, geo_path);
  Cursor cur(std::move(text), geo_path);

  cur.line();
  cur.line();
  auto node_mode = split_ws(lower(cur.content_line()));
  auto elem_mode = split_ws(lower(cur.content_line()));
  if (node_mode.size() < 3 || node_mode[0] != "node" || elem_mode.size() < 3 || elem_mode[0] != "element") {
    cur.fail("expected 'node id' and 'element id' lines");
  }
  const bool node_ids = ids_present(node_mode[2]);
  const bool elem_ids = ids_present(elem_mode[2]);

  std::vector<double> coords;
  std::vector<Region> regions;
  std::string key = lower(cur.content_line());
  if (key == "extents") {
    for (int i = 0; i < 6; ++i) cur.number();
    key = lower(cur.content_line());
  }
  while (true) {
    if (key != "part") cur.fail("expected 'part', found '" + key + "'");
    Part part;
    part.number = static_cast<int>(cur.integer());
    Region region;
    region.name = sanitize_part_name(cur.line());
    if (region.name.empty()) region.name = "part_" + std::to_string(part.number);
    for (const auto& r : regions) {
      if (r.name == region.name) region.name += "_" + std::to_string(part.number);
    }
    part.node_offset = coords.size() / 3;
    std::string next = cur.at_end() ? std::string() : lower(cur.content_line());
    if (next == "block" || next.rfind("block ", 0) == 0) cur.fail("structured 'block' parts are not supported");
    if (next == "coordinates") {
      part.node_count = cur.count();
      if (node_ids) {
        for (std::size_t i = 0; i < part.node_count; ++i) cur.integer();
      }
      std::vector<double> xyz(3 * part.node_count);
      for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t i = 0; i < part.node_count; ++i) xyz[3 * i + a] = cur.number();
      }
      coords.insert(coords.end(), xyz.begin(), xyz.end());
      next = cur.at_end() ? std::string() : lower(cur.content_line());
    }
    while (!next.empty() && next != "part") {
      const auto type = ensight_element(next);
      if (!type) cur.fail("unsupported Ensight element type '" + next + "'");
      const auto ne = cur.count();
      if (elem_ids) {
        for (std::size_t i = 0; i < ne; ++i) cur.integer();
      }
      ElementBlock block;
      block.type = *type;
      const auto npe = static_cast<std::size_t>(node_count(*type));
      block.connectivity.reserve(ne * npe);
      for (std::size_t i = 0; i < ne * npe; ++i) {
        const long id = cur.integer();
        if (id < 1 || static_cast<std::size_t>(id) > part.node_count) {
          cur.fail("connectivity index " + std::to_string(id) + " outside part " +
                   std::to_string(part.number) + " (" + std::to_string(part.node_count) + " nodes)");
        }
        block.connectivity.push_back(static_cast<std::uint32_t>(part.node_offset + static_cast<std::size_t>(id) - 1));
      }
      part.blocks.emplace_back(*type, ne);
      region.blocks.push_back(std::move(block));
      next = cur.at_end() ? std::string() : lower(cur.content_line());
    }
    part.region = regions.size();
    regions.push_back(std::move(region));
    parts_.push_back(std::move(part));
    if (next.empty()) break;
    key = next;
  }
  mesh_ = std::make_shared<const Mesh>(std::move(coords), std::move(regions));

  // Manifest: TIME analysis, one entry per time value.
  manifest_.analysis = AnalysisDomain::Time;
  for (std::size_t s = 0; s < case_.step_count; ++s) manifest_.steps.push_back({s, case_.time_values[s]});

  if (map_.empty()) {
    for (const auto& v : case_.variables) map_.push_back({sanitize_part_name(v.description), v.description});
  }
  for (const auto& m : map_) {
    const auto* v = case_.find(m.ensight_name);
    if (!v) {
      std::string available;
      for (const auto& var : case_.variables) available += (available.empty() ? "" : ", ") + var.description;
      throw ValidationError("Ensight case '" + case_.case_path.string() + "' has no variable '" +
                            m.ensight_name + "' (available: " + available + ")");
    }
    QuantityEntry e;
    e.quantity.name = m.cfs_name;
    e.quantity.defined_on = v->defined_on;
    e.quantity.components = v->components;
    e.quantity.domain = AnalysisDomain::Time;
    for (const auto& p : parts_) {
      const auto n = entity_count(*mesh_, p.region, v->defined_on);
      if (n == 0) continue;
      e.quantity.regions.push_back(mesh_->regions()[p.region].name);
      e.entity_counts.push_back(n);
    }
    for (std::size_t s = 0; s < case_.step_count; ++s) e.steps.push_back(s);
    manifest_.quantities.push_back(std::move(e));
  }
  manifest_.validate();
}

FieldStep EnsightReader::read_step(std::string_view quantity, std::size_t step_index) const {
  const auto* entry = manifest_.find(quantity);
  if (!entry) throw ValidationError("Ensight input has no quantity '" + std::string(quantity) + "'");
  if (step_index >= case_.step_count) {
    throw ValidationError("Ensight input has no step " + std::to_string(step_index));
  }
  const auto mapping = std::find_if(map_.begin(), map_.end(),
                                    [&](const VariableMapping& m) { return m.cfs_name == quantity; });
  const auto* var = case_.find(mapping->ensight_name);
  const auto path = case_.resolve(var->file_pattern, step_index);
  std::string text = read_file(path);
  reject_binary(text, path);
  Cursor cur(std::move(text), path);
  cur.line();

  FieldStep step;
  step.quantity = entry->quantity;
  step.step_index = step_index;
  step.step_value = case_.time_values[step_index];
  step.values.resize(step.quantity.regions.size());
  std::vector<bool> seen(step.quantity.regions.size(), false);
  const auto comps = static_cast<std::size_t>(var->components);

  while (!cur.at_end()) {
    const auto key = lower(cur.content_line());
    if (key != "part") cur.fail("expected 'part', found '" + key + "'");
    const auto number = cur.integer();
    const auto part = std::find_if(parts_.begin(), parts_.end(), [&](const Part& p) { return p.number == number; });
    if (part == parts_.end()) cur.fail("unknown part " + std::to_string(number));
    const auto& region_name = mesh_->regions()[part->region].name;
    const auto slot = step.region_slot(region_name);

    if (var->defined_on == DefinedOn::Node) {
      const auto kw = lower(cur.content_line());
      if (kw != "coordinates") cur.fail("expected 'coordinates', found '" + kw + "'");
      std::vector<double> raw(part->node_count * comps);
      for (std::size_t c = 0; c < comps; ++c) {
        for (std::size_t i = 0; i < part->node_count; ++i) raw[i * comps + c] = cur.number();
      }
      if (!slot) continue;
      const auto nodes = mesh_->region_nodes(part->region);
      auto& out = step.values[*slot];
      out.resize(nodes.size() * comps);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto local = nodes[i] - part->node_offset;
        for (std::size_t c = 0; c < comps; ++c) out[i * comps + c] = raw[local * comps + c];
      }
      seen[*slot] = true;
    } else {
      std::vector<double> cells;
      for (const auto& [type, ne] : part->blocks) {
        const auto kw = lower(cur.content_line());
        if (kw != lower(std::string(to_string(type)))) {
          cur.fail("expected element block '" + lower(std::string(to_string(type))) + "', found '" + kw + "'");
        }
        std::vector<double> raw(ne * comps);
        for (std::size_t c = 0; c < comps; ++c) {
          for (std::size_t i = 0; i < ne; ++i) raw[i * comps + c] = cur.number();
        }
        cells.insert(cells.end(), raw.begin(), raw.end());
      }
      if (!slot) continue;
      step.values[*slot] = std::move(cells);
      seen[*slot] = true;
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw IoError("'" + path.string() + "': no values for part '" + step.quantity.regions[i] + "'");
    }
  }
  return step;
}

std::unique_ptr<EnsightReader> read_ensight(const fs::path& case_path, const VariableMap& map,
                                            bool fix_fv_pyramids_requested) {
  if (fix_fv_pyramids_requested) logger()->warn("Ensight option fixFVPyramids: option ignored");
  return std::make_unique<EnsightReader>(case_path, map);
}

}  // namespace fieldpipe
