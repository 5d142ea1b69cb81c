#include "fieldpipe_cli/cli.hpp"

#include "fieldpipe/container.hpp"
#include "fieldpipe/ensight.hpp"
#include "fieldpipe/error.hpp"
#include "fieldpipe/log.hpp"
#include "fieldpipe/pipeline_executor.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace fieldpipe::cli {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

int run_command(const fs::path& config, unsigned threads, bool validate_only) {
  std::optional<ValidatedPipeline> pipeline;
  try {
    pipeline = validate_pipeline(config);
  } catch (const IoError& e) {
    logger()->error("{}", e.what());
    return kRuntimeFailure;
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kValidationFailure;
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    return kRuntimeFailure;
  }
  if (validate_only) {
    logger()->info("{}: valid ({} filters, {} steps)", config.string(), pipeline->graph.doc.filters.size(),
                   pipeline->graph.doc.steps.num_steps);
    return kOk;
  }
  try {
    RunOptions options;
    options.threads = threads;
    const auto summary = run_pipeline(*pipeline, options);
    for (const auto& o : summary.outputs) {
      logger()->info("wrote {}: {} steps, quantities {}", o.path.string(), o.steps, join(o.quantities));
    }
    logger()->info("finished: {} steps, {} quantities, {:.3f} s", summary.steps, summary.quantities,
                   summary.seconds);
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    return kRuntimeFailure;
  }
  return kOk;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return kOk;
  } catch (const ValidationError& e) {
    logger()->error("{}", e.what());
    return kValidationFailure;
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    return kRuntimeFailure;
  }
}

}  // namespace

void info_report(const fs::path& container, std::ostream& out) {
  const auto reader = read_native(container);
  const auto& mesh = *reader->mesh();
  const auto& m = reader->manifest();
  std::ostringstream s;
  s.precision(9);
  s << "container: " << container.string() << '\n';
  s << "analysis: " << to_string(m.analysis) << '\n';
  s << "nodes: " << mesh.node_count() << '\n';
  s << "regions: " << mesh.region_count() << '\n';
  for (std::size_t r = 0; r < mesh.region_count(); ++r) {
    const auto& region = mesh.regions()[r];
    std::vector<std::string> blocks;
    for (const auto& b : region.blocks) {
      blocks.push_back(std::string(to_string(b.type)) + " x " + std::to_string(b.connectivity.size() / node_count(b.type)));
    }
    s << "  " << region.name << ": " << mesh.element_count(r) << " elements (" << join(blocks) << "), "
      << mesh.region_nodes(r).size() << " nodes\n";
  }
  s << "steps: " << m.steps.size() << '\n';
  for (const auto& st : m.steps) s << "  " << st.index << ": " << st.value << '\n';
  if (m.quantities.empty()) {
    s << "no quantities\n";
  } else {
    s << "quantities: " << m.quantities.size() << '\n';
  }
  for (const auto& q : m.quantities) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto index : q.steps) {
      const auto step = reader->read_step(q.quantity.name, index);
      for (const auto& v : step.values) {
        for (const double x : v) {
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
      }
    }
    s << "  " << q.quantity.name << ": " << to_string(q.quantity.defined_on) << ", " << q.quantity.components
      << (q.quantity.components == 1 ? " component, " : " components, ") << to_string(q.quantity.value_kind())
      << ", regions [" << join(q.quantity.regions) << "], " << q.steps.size() << " steps";
    if (q.steps.empty()) {
      s << '\n';
    } else {
      s << ", range [" << lo << ", " << hi << "]\n";
    }
  }
  out << s.str();
}

void strip_mesh(const fs::path& input, const fs::path& output) {
  const auto ext = input.extension().string();
  if (ext == ".case" || ext == ".encas") {
    const auto reader = read_ensight(input, {}, false);
    write_mesh_only(output, *reader->mesh(), AnalysisDomain::Time);
    return;
  }
  const auto manifest = read_manifest(input);
  write_mesh_only(output, *read_target_mesh(input), manifest.analysis);
}

int main(int argc, char** argv, std::ostream& out) {
  CLI::App app{"fieldpipe: batch field processing pipelines on unstructured meshes"};
  app.require_subcommand(1);
  app.fallthrough();

  unsigned threads = 0;
  bool verbose = false;
  bool quiet = false;
  app.add_option("--threads", threads, "worker threads (0: hardware count)");
  app.add_flag("--verbose", verbose, "log debug messages");
  app.add_flag("--quiet", quiet, "log errors only");

  fs::path config;
  bool validate_only = false;
  auto* run = app.add_subcommand("run", "validate and execute a pipeline document");
  run->add_option("config", config, "pipeline XML document")->required();
  run->add_flag("--validate-only", validate_only, "stop after validation");

  fs::path validate_config;
  auto* validate = app.add_subcommand("validate", "check a pipeline document without running it");
  validate->add_option("config", validate_config, "pipeline XML document")->required();

  fs::path strip_in, strip_out;
  auto* strip = app.add_subcommand("strip-mesh", "write a geometry-only copy of a dataset");
  strip->add_option("input", strip_in, "native container or Ensight case file")->required();
  strip->add_option("output", strip_out, "output container")->required();

  fs::path info_path;
  auto* info = app.add_subcommand("info", "print a summary of a container");
  info->add_option("container", info_path, "native container")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidationFailure;
  }
  if (verbose && quiet) {
    logger()->error("--verbose and --quiet are mutually exclusive");
    return kValidationFailure;
  }
  set_verbosity(quiet ? Verbosity::Quiet : verbose ? Verbosity::Verbose : Verbosity::Normal);

  if (*run) return run_command(config, threads, validate_only);
  if (*validate) return run_command(validate_config, threads, true);
  if (*strip) return guarded([&] { strip_mesh(strip_in, strip_out); });
  return guarded([&] { info_report(info_path, out); });
}

}  // namespace fieldpipe::cli
