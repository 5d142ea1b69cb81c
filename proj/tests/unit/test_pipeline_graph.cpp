#include "fieldpipe/error.hpp"
#include "fieldpipe/pipeline_graph.hpp"

#include <doctest.h>

using namespace fieldpipe;

namespace {

const char* kSteps = R"(
    <stepValueDefinition>
      <startStop>
        <startStep value="0"/>
        <numSteps value="10"/>
        <startTime value="1e-05"/>
        <delta value="1e-05"/>
        <deleteOffset value="no"/>
      </startStop>
    </stepValueDefinition>)";

const char* kInput = R"(
    <meshInput id="inputFilter" gridType="fullGrid">
      <inputFile><hdf5 fileName="in.cfsd"/></inputFile>
    </meshInput>)";

std::string doc(const std::string& body, bool steps = true) {
  return std::string("<cfsdat>\n  <pipeline>") + (steps ? kSteps : "") + kInput + body + "\n  </pipeline>\n</cfsdat>\n";
}

std::string c2n(const std::string& id, const std::string& inputs, const std::string& in, const std::string& out) {
  return "\n    <interpolation type=\"FieldInterpolation_Cell2Node\" id=\"" + id + "\" inputFilterIds=\"" + inputs +
         "\">\n      <targetMesh><hdf5 fileName=\"target.cfsd\"/></targetMesh>\n"
         "      <singleResult><inputQuantity resultName=\"" + in + "\"/><outputQuantity resultName=\"" + out +
         "\"/></singleResult>\n    </interpolation>";
}

std::string output(const std::string& inputs, const std::vector<std::string>& results) {
  std::string s = "\n    <meshOutput id=\"Outout\" inputFilterIds=\"" + inputs + "\">\n      <saveResults>";
  for (const auto& r : results) s += "<result resultName=\"" + r + "\"><allRegions/></result>";
  return s + "</saveResults>\n    </meshOutput>";
}

PipelineGraph graph(const std::string& xml) { return build_graph(parse_pipeline_string(xml, "/work/pipe.xml")); }

InputCatalog catalog() {
  InputCatalog c;
  c["inputFilter"]["p"] = {DefinedOn::Cell, 1, AnalysisDomain::Time, std::vector<std::string>{"fluid"}};
  c["inputFilter"]["u"] = {DefinedOn::Node, 3, AnalysisDomain::Time, std::vector<std::string>{"fluid"}};
  c["inputFilter"]["s"] = {DefinedOn::Node, 1, AnalysisDomain::Time, std::vector<std::string>{"fluid", "wall"}};
  return c;
}

}  // namespace

TEST_SUITE("pipeline_graph") {

TEST_CASE("serial listing forms a chain") {
  const auto g = graph(doc(c2n("interp1", "inputFilter", "p", "pn") + output("interp1", {"pn"})));
  REQUIRE(g.order.size() == 3);
  CHECK(g.doc.filters[g.order[0]].id == "inputFilter");
  CHECK(g.doc.filters[g.order[1]].id == "interp1");
  CHECK(g.doc.filters[g.order[2]].id == "Outout");
  CHECK(g.doc.steps.num_steps == 10);
  CHECK(g.doc.steps.start_time == 1e-5);
  CHECK(g.doc.filters[0].input.file == "/work/in.cfsd");
  CHECK(g.filter("Outout").output.path == "/work/Outout.cfsd");
  CHECK(g.filter("interp1").target_mesh == std::filesystem::path("/work/target.cfsd"));
}

TEST_CASE("parallel listing shares the input and joins at the output") {
  for (const char* sep : {" ", ",", ", "}) {
    const std::string ids = std::string("interp1") + sep + "interp2" + sep + "interp3";
    const auto g = graph(doc(c2n("interp1", "inputFilter", "p", "a") + c2n("interp2", "inputFilter", "p", "b") +
                             c2n("interp3", "inputFilter", "p", "c") + output(ids, {"a", "b", "c"})));
    CHECK(g.filter("Outout").inputs == std::vector<std::string>{"interp1", "interp2", "interp3"});
    CHECK(g.doc.filters[g.order.back()].id == "Outout");
  }
}

TEST_CASE("structural errors carry line context") {
  CHECK_THROWS_WITH_AS(graph(doc(c2n("interp1", "a", "p", "pn") + output("interp1", {"pn"}))),
                       doctest::Contains("unknown filter 'a'"), ValidationError);
  CHECK_THROWS_WITH_AS(graph(doc(c2n("interp1", "inputFilter", "p", "pn") + c2n("interp1", "inputFilter", "p", "q") +
                                 output("interp1", {"pn"}))),
                       doctest::Contains("duplicate filter id 'interp1'"), ValidationError);
  CHECK_THROWS_WITH_AS(graph(doc(c2n("interp1", "inputFilter", "p", "pn") + output("interp1", {"pn"}), false)),
                       doctest::Contains("missing <stepValueDefinition>"), ValidationError);
  const std::string unknown =
      doc("\n    <interpolation type=\"FieldInterpolation_Magic\" id=\"x\" inputFilterIds=\"inputFilter\"/>");
  CHECK_THROWS_WITH_AS(graph(unknown), doctest::Contains("line 15"), ValidationError);
  CHECK_THROWS_WITH_AS(graph(unknown), doctest::Contains("unknown filter type 'FieldInterpolation_Magic'"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(graph(doc(c2n("interp1", "inputFilter", "p", "pn"))), doctest::Contains("no meshOutput"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(graph("<cfsdat><pipeline><meshInput id=\"x\"></pipeline></cfsdat>"),
                       doctest::Contains("XML error"), ValidationError);
}

TEST_CASE("cycles are reported with their path") {
  const auto xml = doc(c2n("a", "inputFilter c", "p", "x") + c2n("b", "a", "x", "y") + c2n("c", "b", "y", "z") +
                       output("c", {"z"}));
  CHECK_THROWS_WITH_AS(graph(xml), doctest::Contains("cycle in filter graph: a -> b -> c -> a"), ValidationError);
}

TEST_CASE("outputs are terminal") {
  const auto xml = doc(c2n("a", "inputFilter", "p", "x") + output("a", {"x"}) + c2n("b", "Outout", "x", "y"));
  CHECK_THROWS_WITH_AS(graph(xml), doctest::Contains("outputs must be terminal"), ValidationError);
}

TEST_CASE("topological order breaks ties by document order") {
  const auto xml = doc(c2n("z", "y", "pa", "pz") + c2n("y", "inputFilter", "p", "pa") +
                       c2n("x", "inputFilter", "p", "pb") + output("z x", {"pz", "pb"}));
  const auto g = graph(xml);
  std::vector<std::string> ids;
  for (const auto i : g.order) ids.push_back(g.doc.filters[i].id);
  // Among ready filters the earliest in the document runs first.
  CHECK(ids == std::vector<std::string>{"inputFilter", "y", "z", "x", "Outout"});
}

TEST_CASE("filter parameters are read from the document") {
  const auto xml = doc(R"(
    <interpolation type="FieldInterpolation_NearestNeighbour" inputFilterIds="inputFilter" id="nn">
      <IntSchemeNN interpolationExponent="3" numNeighbours="4" globalFactor="2.5"/>
      <singleResult><inputQuantity resultName="s"/><outputQuantity resultName="s2"/></singleResult>
      <regions><sourceRegions><region name="fluid"/></sourceRegions>
               <targetRegions><region name="wall"/></targetRegions></regions>
    </interpolation>
    <interpolation type="FieldInterpolation_RBF" id="rbf" inputFilterIds="inputFilter">
      <IntSchemeRBF numNeighbours="20" numNeighbours_weight="10" globalFactor="" useCGAL4RBF="false"/>
      <useElemAsTarget>true</useElemAsTarget>
      <noSlipWall name="wall"/>
      <singleResult><inputQuantity resultName="s"/><outputQuantity resultName="s3"/></singleResult>
    </interpolation>
    <differentiation type="SpaceDifferentiation_Gradient" id="grad" inputFilterIds="inputFilter">
      <RBF_Settings epsilonScaling="0.5" betaScaling="2" kScaling="" logEps="false" stencilSize="27"/>
      <singleResult><inputQuantity resultName="s"/><outputQuantity resultName="g"/></singleResult>
    </differentiation>
    <aeroacoustic type="AeroacousticSource_LighthillSourceTerm" id="lh" inputFilterIds="inputFilter">
      <sourceSum>true</sourceSum>
      <RBF_Settings epsilonScaling="1e-1"/>
      <ResultList><velocity resultName="u"/><vorticity resultName=""/><density resultName="rho"/>
        <outputQuantity resultName="acouRhsLoad"/></ResultList>
    </aeroacoustic>
    <timeDeriv1 id="dt" inputFilterIds="inputFilter">
      <singleResult><inputQuantity resultName="s"/><outputQuantity resultName="acouRhsLoadP"/></singleResult>
    </timeDeriv1>)" + output("nn,rbf,grad,lh,dt", {"s2", "s3", "g", "acouRhsLoad", "acouRhsLoadP"}));
  auto g = graph(xml);
  const auto& nn = g.filter("nn");
  CHECK(nn.kind == FilterKind::NearestNeighbour);
  CHECK(nn.shepard.exponent == 3.0);
  CHECK(nn.shepard.neighbours == 4);
  CHECK(nn.shepard.global_factor == 2.5);
  CHECK(nn.source_regions == std::vector<std::string>{"fluid"});
  CHECK(nn.target_regions == std::vector<std::string>{"wall"});
  const auto& rbf = g.filter("rbf");
  CHECK(rbf.rbf.neighbours == 20);
  CHECK(rbf.rbf.influence_points == 10);
  CHECK(rbf.rbf.global_factor == 1.0);
  CHECK(rbf.rbf.use_elem_as_target);
  CHECK(rbf.rbf.no_slip_wall == std::optional<std::string>("wall"));
  const auto& grad = g.filter("grad");
  CHECK(grad.rbf_fd.epsilon_scaling == 0.5);
  CHECK(grad.rbf_fd.beta_scaling == 2.0);
  CHECK(grad.rbf_fd.k_scaling == 1.0);
  CHECK(grad.rbf_fd.stencil_size == 27);
  const auto& lh = g.filter("lh");
  CHECK(lh.kind == FilterKind::LighthillScalar);
  CHECK(lh.velocity == "u");
  CHECK_FALSE(lh.vorticity.has_value());
  CHECK(lh.consumed() == std::vector<std::string>{"u"});
  CHECK(g.filter("dt").kind == FilterKind::TimeDeriv1);

  check_quantities(g, catalog(), 10);
  const auto& shapes = g.shapes[g.index.at("rbf")];
  CHECK(shapes.at("s3").defined_on == DefinedOn::Cell);
  CHECK(g.shapes[g.index.at("grad")].at("g").components == 3);
  CHECK(g.shapes[g.index.at("lh")].at("acouRhsLoad").components == 1);
  CHECK_THROWS_WITH_AS(check_quantities(g, catalog(), 4), doctest::Contains("at least 5 steps"), ValidationError);
}

TEST_CASE("quantity checks reject wrong shapes and unknown names") {
  auto bad_grad = graph(doc(R"(
    <differentiation type="SpaceDifferentiation_Gradient" id="grad" inputFilterIds="inputFilter">
      <RBF_Settings epsilonScaling="0.5"/>
      <singleResult><inputQuantity resultName="u"/><outputQuantity resultName="g"/></singleResult>
    </differentiation>)" + output("grad", {"g"})));
  CHECK_THROWS_WITH_AS(check_quantities(bad_grad, catalog(), 10), doctest::Contains("must be a scalar"),
                       ValidationError);

  auto missing = graph(doc(c2n("interp1", "inputFilter", "nope", "pn") + output("interp1", {"pn"})));
  CHECK_THROWS_WITH_AS(check_quantities(missing, catalog(), 10),
                       doctest::Contains("produced by none of its input filters"), ValidationError);

  auto unproduced = graph(doc(c2n("interp1", "inputFilter", "p", "pn") + output("interp1", {"other"})));
  CHECK_THROWS_AS(check_quantities(unproduced, catalog(), 10), ValidationError);

  auto region = graph(doc(R"(
    <meshOutput id="o" inputFilterIds="inputFilter">
      <saveResults><result resultName="s"><regionList><region name="regionX"/></regionList></result></saveResults>
    </meshOutput>)"));
  CHECK_THROWS_WITH_AS(check_quantities(region, catalog(), 10), doctest::Contains("region 'regionX'"),
                       ValidationError);

  auto freq = graph(doc(R"(
    <timeDeriv1 id="dt" inputFilterIds="inputFilter">
      <singleResult><inputQuantity resultName="s"/><outputQuantity resultName="ds"/></singleResult>
    </timeDeriv1>)" + output("dt", {"ds"})));
  auto c = catalog();
  c["inputFilter"]["s"].domain = AnalysisDomain::Frequency;
  CHECK_THROWS_WITH_AS(check_quantities(freq, c, 10), doctest::Contains("FREQUENCY"), ValidationError);

  auto rbf_cell = graph(doc(R"(
    <interpolation type="FieldInterpolation_RBF" id="rbf" inputFilterIds="inputFilter">
      <singleResult><inputQuantity resultName="p"/><outputQuantity resultName="p2"/></singleResult>
    </interpolation>)" + output("rbf", {"p2"})));
  CHECK_THROWS_WITH_AS(check_quantities(rbf_cell, catalog(), 10), doctest::Contains("useElemAsTarget"),
                       ValidationError);

  CHECK_THROWS_WITH_AS(graph(doc(R"(
    <aeroacoustic type="AeroacousticSource_LambVector" id="lv" inputFilterIds="inputFilter">
      <sourceSum>false</sourceSum>
      <RBF_Settings epsilonScaling="0.1"/>
      <ResultList><velocity resultName="u"/><outputQuantity resultName="L"/></ResultList>
    </aeroacoustic>)" + output("lv", {"L"}))),
                       doctest::Contains("unsupported"), ValidationError);
}

TEST_CASE("reserved solver names know their shapes") {
  CHECK(reserved_components("acouRhsLoad") == std::optional<int>(1));
  CHECK(reserved_components("fluidMechVelocity") == std::optional<int>(3));
  CHECK(reserved_components("acouDivLighthillTensor") == std::optional<int>(3));
  CHECK_FALSE(reserved_components("myQuantity").has_value());
}

}  // TEST_SUITE
