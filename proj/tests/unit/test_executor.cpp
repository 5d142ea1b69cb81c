#include "fieldpipe/error.hpp"
#include "fieldpipe/pipeline_executor.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstring>
#include <fstream>

using namespace fieldpipe;
using namespace fieldpipe::test;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kSteps = 10;
constexpr double kDt = 1e-3;

double step_time(std::size_t s) { return kDt + static_cast<double>(s) * kDt; }

// 4x4x4 hexahedra, the lower half in z forming "left", the upper "right".
Mesh split_grid() {
  const auto g = hex_grid(linspace(0, 1, 5), linspace(0, 1, 5), linspace(0, 1, 5));
  const auto& conn = g.regions()[0].blocks[0].connectivity;
  const auto half = conn.begin() + static_cast<std::ptrdiff_t>(conn.size() / 2);
  return Mesh(std::vector<double>(g.coordinates().begin(), g.coordinates().end()),
              {Region{"left", {{ElementType::Hexa8, {conn.begin(), half}}}},
               Region{"right", {{ElementType::Hexa8, {half, conn.end()}}}}});
}

void write_input(const fs::path& root) {
  const auto mesh = split_grid();
  std::vector<FieldStep> steps;
  for (std::size_t s = 0; s < kSteps; ++s) {
    const double t = step_time(s);
    steps.push_back(node_step(mesh, {"left", "right"}, "p", 1, [t](const Vec3& x) {
      return std::array<double, 3>{x.x() + x.y() + 3.0 * t, 0, 0};
    }, s, t));
    steps.push_back(cell_step(mesh, {"left", "right"}, "pc", 1, [t](const Vec3& x) {
      return std::array<double, 3>{x.z() * 1e3 + t, 0, 0};
    }, s, t));
    steps.push_back(node_step(mesh, {"left", "right"}, "u", 3, [t](const Vec3& x) {
      return std::array<double, 3>{x.y() + t, -x.x(), 0.5 * x.z()};
    }, s, t));
  }
  write_dataset(root, mesh, steps);
}

std::string pipeline(const std::string& body, std::size_t num_steps = kSteps) {
  return "<cfsdat>\n<pipeline>\n<stepValueDefinition><startStop><startStep value=\"0\"/>"
         "<numSteps value=\"" + std::to_string(num_steps) + "\"/><startTime value=\"1e-3\"/>"
         "<delta value=\"1e-3\"/></startStop></stepValueDefinition>\n"
         "<meshInput id=\"input\"><inputFile><native fileName=\"in.cfsd\"/></inputFile></meshInput>\n" +
         body + "\n</pipeline>\n</cfsdat>\n";
}

std::string output(const std::string& inputs, const std::vector<std::string>& results,
                   const std::string& file = "out.cfsd") {
  std::string s = "<meshOutput id=\"out\" inputFilterIds=\"" + inputs + "\"><outputFile><native fileName=\"" + file +
                  "\"/></outputFile><saveResults>";
  for (const auto& r : results) s += "<result resultName=\"" + r + "\"/>";
  return s + "</saveResults></meshOutput>";
}

std::string single(const std::string& element, const std::string& type, const std::string& id,
                   const std::string& inputs, const std::string& in, const std::string& out,
                   const std::string& extra = "") {
  return "<" + element + (type.empty() ? "" : " type=\"" + type + "\"") + " id=\"" + id + "\" inputFilterIds=\"" +
         inputs + "\">" + extra + "<singleResult><inputQuantity resultName=\"" + in +
         "\"/><outputQuantity resultName=\"" + out + "\"/></singleResult></" + element + ">\n";
}

std::string gradient(const std::string& id, const std::string& inputs, const std::string& in, const std::string& out) {
  return single("differentiation", "SpaceDifferentiation_Gradient", id, inputs, in, out,
                "<RBF_Settings epsilonScaling=\"0.5\"/>");
}

struct Workspace {
  TempDir dir;
  Workspace() { write_input(dir / "in.cfsd"); }
  fs::path write(const std::string& xml, const std::string& name = "p.xml") const {
    std::ofstream(dir / name) << xml;
    return dir / name;
  }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

bool bit_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("executor") {

TEST_CASE("an input wired straight to an output copies every value bit for bit") {
  Workspace ws;
  const auto summary = run_pipeline(ws.write(pipeline(output("input", {"p", "pc", "u"}))), {1, {}});
  CHECK(summary.steps == kSteps);
  CHECK(summary.quantities == 3);
  const auto in = read_native(ws / "in.cfsd");
  const auto out = read_native(ws / "out.cfsd");
  REQUIRE(out->manifest().steps.size() == kSteps);
  for (const auto* name : {"p", "pc", "u"}) {
    for (std::size_t s = 0; s < kSteps; ++s) {
      const auto a = in->read_step(name, s);
      const auto b = out->read_step(name, s);
      CHECK(b.step_value == a.step_value);
      CHECK(b.quantity == a.quantity);
      for (const auto* r : {"left", "right"}) CHECK(bit_equal(a.region_values(r), b.region_values(r)));
    }
  }
}

TEST_CASE("three parallel filters feed one output") {
  Workspace ws;
  const auto xml = pipeline(gradient("grad", "input", "p", "gp") +
                            single("interpolation", "FieldInterpolation_NearestNeighbour", "nn", "input", "p", "pn") +
                            single("differentiation", "SpaceDifferentiation_Divergence", "div", "input", "u", "du",
                                   "<RBF_Settings epsilonScaling=\"0.5\"/>") +
                            output("grad nn div", {"gp", "pn", "du"}));
  const auto summary = run_pipeline(ws.write(xml), {1, {}});
  REQUIRE(summary.outputs.size() == 1);
  CHECK(summary.outputs[0].quantities == std::vector<std::string>{"gp", "pn", "du"});
  CHECK(summary.outputs[0].steps == kSteps);
  const auto out = read_native(ws / "out.cfsd");
  // p is affine, so the gradient is exact up to the stencil conditioning.
  const auto g = out->read_step("gp", 4);
  for (const auto* r : {"left", "right"}) {
    const auto v = g.region_values(r);
    for (std::size_t i = 0; i < v.size(); i += 3) {
      CHECK(v[i] == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(v[i + 1] == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(std::abs(v[i + 2]) < 1e-6);
    }
  }
  const auto du = out->read_step("du", 7);
  for (const double v : du.region_values("left")) CHECK(v == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("filters see each step in topological order") {
  Workspace ws;
  const auto xml = pipeline(gradient("g2", "g1", "gp", "gg") + gradient("g1", "input", "p", "gp") +
                            output("g2", {"gg"}));
  std::vector<std::pair<std::string, std::size_t>> trace;
  RunOptions opts{1, [&](const std::string& id, std::size_t j) { trace.emplace_back(id, j); }};
  CHECK_THROWS_WITH_AS(run_pipeline(ws.write(xml), opts), doctest::Contains("must be a scalar"), ValidationError);
  CHECK(trace.empty());

  const auto ok = pipeline(single("interpolation", "FieldInterpolation_NearestNeighbour", "b", "a", "pn", "pnn") +
                           single("interpolation", "FieldInterpolation_NearestNeighbour", "a", "input", "p", "pn") +
                           output("b a", {"pnn", "pn"}));
  run_pipeline(ws.write(ok), opts);
  REQUIRE(trace.size() == 4 * kSteps);
  const std::vector<std::string> order = {"input", "a", "b", "out"};
  for (std::size_t j = 0; j < kSteps; ++j) {
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(trace[4 * j + k].first == order[k]);
      CHECK(trace[4 * j + k].second == j);
    }
  }
}

TEST_CASE("a fault keeps every earlier step on disk and propagates") {
  Workspace ws;
  const auto xml = pipeline(gradient("grad", "input", "p", "gp") + output("input grad", {"p", "gp"}));
  RunOptions opts{1, [](const std::string& id, std::size_t j) {
                    if (id == "grad" && j == 5) throw std::runtime_error("injected");
                  }};
  CHECK_THROWS_WITH_AS(run_pipeline(ws.write(xml), opts), doctest::Contains("injected"), FilterError);
  const auto m = read_manifest(ws / "out.cfsd");
  REQUIRE(m.steps.size() == 5);
  for (std::size_t j = 0; j < 5; ++j) CHECK(m.steps[j].index == j);
  CHECK(m.find("p")->steps == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(m.find("gp")->steps == std::vector<std::size_t>{0, 1, 2, 3, 4});
  const auto r = read_native(ws / "out.cfsd");
  CHECK(r->read_step("gp", 4).all_finite());
}

TEST_CASE("region lists restrict the written result") {
  Workspace ws;
  auto restricted = output("input", {"p"});
  restricted.replace(restricted.find("<result resultName=\"p\"/>"), 24,
                     "<result resultName=\"p\"><regionList><region name=\"right\"/></regionList></result>");
  run_pipeline(ws.write(pipeline(restricted)), {1, {}});
  const auto out = read_native(ws / "out.cfsd");
  const auto in = read_native(ws / "in.cfsd");
  const auto p = out->read_step("p", 3);
  CHECK(p.quantity.regions == std::vector<std::string>{"right"});
  CHECK(bit_equal(p.region_values("right"), in->read_step("p", 3).region_values("right")));

  auto unknown = pipeline(restricted);
  unknown.replace(unknown.find("name=\"right\""), 12, "name=\"nowhere\"");
  CHECK_THROWS_WITH_AS(validate_pipeline(ws.write(unknown, "u.xml")), doctest::Contains("region 'nowhere'"),
                       ValidationError);
}

TEST_CASE("validation reads manifests only and creates nothing") {
  Workspace ws;
  const auto path = ws.write(pipeline(gradient("grad", "input", "p", "gp") + output("grad", {"gp"})));
  const auto v = validate_pipeline(path);
  CHECK(v.graph.order.size() == 3);
  CHECK(v.schedules.at("input").size() == kSteps);
  CHECK_FALSE(fs::exists(ws / "out.cfsd"));

  CHECK_THROWS_WITH_AS(validate_pipeline(ws.write(pipeline(output("input", {"p"}), 11), "long.xml")),
                       doctest::Contains("nearest available"), ValidationError);
  CHECK_THROWS_WITH_AS(validate_pipeline(ws.write(pipeline(output("input", {"p"}, "in.cfsd")), "over.xml")),
                       doctest::Contains("overwrite an input"), ValidationError);
  CHECK_THROWS_WITH_AS(
      validate_pipeline(ws.write(pipeline(single("interpolation", "FieldInterpolation_Node2Cell", "n2c", "input", "p",
                                                 "pe") +
                                          output("n2c", {"pe"})),
                                 "n2c.xml")),
      doctest::Contains("targetMesh"), ValidationError);
  fs::rename(ws / "in.cfsd", ws / "moved.cfsd");
  CHECK_THROWS_AS(validate_pipeline(path), IoError);
  CHECK_FALSE(fs::exists(ws / "out.cfsd"));
}

TEST_CASE("the time derivative drops two steps at each end") {
  Workspace ws;
  const auto xml = pipeline(single("timeDeriv1", "", "dt", "input", "p", "dp") + output("input dt", {"p", "dp"}));
  run_pipeline(ws.write(xml), {1, {}});
  const auto m = read_manifest(ws / "out.cfsd");
  CHECK(m.steps.size() == kSteps);
  CHECK(m.find("p")->steps.size() == kSteps);
  CHECK(m.find("dp")->steps == std::vector<std::size_t>{2, 3, 4, 5, 6, 7});
  const auto r = read_native(ws / "out.cfsd");
  for (std::size_t j = 2; j < 8; ++j) {
    const auto d = r->read_step("dp", j);
    CHECK(d.step_value == doctest::Approx(step_time(j)).epsilon(1e-12));
    for (const auto* reg : {"left", "right"}) {
      for (const double v : d.region_values(reg)) CHECK(v == doctest::Approx(3.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  Workspace ws;
  const auto path = ws.write(pipeline(gradient("grad", "input", "p", "gp") +
                                      single("differentiation", "SpaceDifferentiation_Curl", "curl", "input", "u",
                                             "cu", "<RBF_Settings epsilonScaling=\"0.5\"/>") +
                                      output("grad curl", {"gp", "cu"})));
  run_pipeline(path, {1, {}});
  fs::rename(ws / "out.cfsd", ws / "serial.cfsd");
  run_pipeline(path, {3, {}});
  CHECK(same_tree(ws / "serial.cfsd", ws / "out.cfsd"));
}

}  // TEST_SUITE
