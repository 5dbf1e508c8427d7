// fracdim: command-line front end for the experiment runner.

#include <cstdlib>
#include <fstream>
#include <set>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracdim/error.hpp"
#include "fracdim/experiment.hpp"
#include "fracdim/experiment_spec.hpp"
#include "fracdim/report.hpp"

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  std::string out;
  bool quiet = false;
};

// Flags shared by the single-task verbs; each maps onto a config key.
struct SpecFlags {
  std::string config;
  std::string name;
  std::optional<double> hurst;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> n_points;
  std::string fields;
  std::optional<std::size_t> ensemble;
  std::string generator;
  std::string scheme;
  std::string t_range;
  std::string x0;
  std::vector<std::string> params;
};

void add_spec_flags(CLI::App* app, SpecFlags& f) {
  app->add_option("-c,--config", f.config, "Base configuration file")->check(CLI::ExistingFile);
  app->add_option("--name", f.name, "Experiment name (output subdirectory)");
  app->add_option("-H,--hurst", f.hurst, "Hurst parameter in (0.25, 1)");
  app->add_option("-d,--dim", f.dim, "Path dimension");
  app->add_option("-n,--n-points", f.n_points, "Grid intervals, a power of two");
  app->add_option("--fields", f.fields, "Comma-separated field catalog names");
  app->add_option("-e,--ensemble", f.ensemble, "Ensemble size");
  app->add_option("--generator", f.generator, "cholesky or circulant");
  app->add_option("--scheme", f.scheme, "step2_davie, step3 or auto");
  app->add_option("--t-range", f.t_range, "Time interval as 'a, b'");
  app->add_option("--x0", f.x0, "Initial state, one value or comma list");
  app->add_option("--set", f.params, "Estimator parameter section.key=value (repeatable)");
}

std::string to_text(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

// Flag values go in front of the document; top-level lines of the base file
// with the same key are dropped so the parser sees each key once.
fracdim::ExperimentSpec build_spec(const SpecFlags& f, const std::string& default_name,
                                   const std::vector<std::string>& tasks) {
  std::vector<std::pair<std::string, std::string>> kv;
  if (!f.name.empty()) kv.emplace_back("name", f.name);
  if (f.hurst) kv.emplace_back("hurst", to_text(*f.hurst));
  if (f.dim) kv.emplace_back("dim", std::to_string(*f.dim));
  if (f.n_points) kv.emplace_back("n_points", std::to_string(*f.n_points));
  if (!f.fields.empty()) kv.emplace_back("fields", f.fields);
  if (f.ensemble) kv.emplace_back("ensemble", std::to_string(*f.ensemble));
  if (!f.generator.empty()) kv.emplace_back("generator", f.generator);
  if (!f.scheme.empty()) kv.emplace_back("scheme", f.scheme);
  if (!f.t_range.empty()) kv.emplace_back("t_range", f.t_range);
  if (!f.x0.empty()) kv.emplace_back("x0", f.x0);

  std::set<std::string> given;
  std::ostringstream doc;
  for (const auto& [k, v] : kv) {
    doc << k << " = " << v << "\n";
    given.insert(k);
  }
  bool has_name = given.count("name") > 0;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw fracdim::ConfigError("cannot read " + f.config);
    std::string line;
    bool top = true;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (!t.empty() && t.front() == '[') top = false;
      const auto eq = t.find('=');
      if (top && eq != std::string::npos && t.front() != '#') {
        const std::string key = trim(t.substr(0, eq));
        if (given.count(key)) continue;
        has_name = has_name || key == "name";
      }
      doc << line << "\n";
    }
  }
  // Prepended: after a section header the key would belong to that section.
  const std::string text = (has_name ? "" : "name = " + default_name + "\n") + doc.str();

  fracdim::ExperimentSpec spec = fracdim::parse_spec(text);
  for (const auto& p : f.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw fracdim::ConfigError("--set expects section.key=value, got " + p);
    spec.estimator_params[trim(p.substr(0, eq))] = trim(p.substr(eq + 1));
  }
  if (!tasks.empty()) spec.tasks = tasks;
  fracdim::validate_spec(spec);
  return spec;
}

std::filesystem::path output_root(const Globals& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("FRACDIM_OUT"); env && *env) return env;
  return "fracdim_out";
}

int execute(fracdim::ExperimentSpec spec, const Globals& g) {
  if (g.seed) spec.base_seed = *g.seed;
  fracdim::RunOptions opts;
  opts.jobs = g.jobs;
  opts.output_root = output_root(g);
  const auto report = fracdim::run(spec, opts);
  const auto dir = fracdim::output_directory(spec, opts);
  fracdim::write_report(report, dir);
  if (!g.quiet) std::cout << fracdim::report_render(report).text;
  std::cout << "report: " << (dir / "report.json").string() << "\n";
  return fracdim::exit_status(report);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracdim: fractal dimension experiments for fBm-driven rough differential equations"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Base seed; member m uses seed + m");
  app.add_option("-j,--jobs", g.jobs, "Worker threads (default: all cores)");
  app.add_option("-o,--out", g.out, "Output root (default: $FRACDIM_OUT or ./fracdim_out)");
  app.add_flag("-q,--quiet", g.quiet, "Print only the report location");

  struct Verb {
    const char* name;
    const char* help;
    std::vector<std::string> tasks;
  };
  const std::vector<Verb> verbs = {
      {"gen", "Sample driving fBm paths and write them", {"generate"}},
      {"solve", "Solve the RDE for every field and write the solutions", {"solve"}},
      {"dim", "Box-counting dimension of images (or graphs with --graph)", {"dim_image"}},
      {"levelset", "Level-set dimension or vanishing tube hits", {"levelset"}},
      {"tail", "Sup-increment tail exponent and time scaling", {"tail"}},
      {"density", "Increment density decay and positivity (--bivariate adds the joint law)",
       {"density"}},
      {"energy", "Gamma-energy refinement dichotomy", {"energy"}},
      {"mu", "Mollified occupation measures mu_n", {"mu"}},
  };
  std::vector<SpecFlags> flags(verbs.size());
  std::vector<CLI::App*> subs;
  bool graph = false, image_too = false, bivariate = false;
  for (std::size_t i = 0; i < verbs.size(); ++i) {
    auto* sub = app.add_subcommand(verbs[i].name, verbs[i].help);
    add_spec_flags(sub, flags[i]);
    subs.push_back(sub);
  }
  subs[2]->add_flag("--graph", graph, "Estimate the graph dimension instead");
  subs[2]->add_flag("--both", image_too, "Estimate image and graph dimensions");
  subs[5]->add_flag("--bivariate", bivariate, "Also run the bivariate decay check");

  std::string repro_config;
  auto* repro = app.add_subcommand("repro", "Run every task listed in a configuration file");
  repro->add_option("config", repro_config, "Configuration file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (repro->parsed()) return execute(fracdim::parse_spec_file(repro_config), g);
    for (std::size_t i = 0; i < verbs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      std::vector<std::string> tasks = verbs[i].tasks;
      if (i == 2 && (graph || image_too)) tasks = image_too ? std::vector<std::string>{"dim_image", "dim_graph"}
                                                            : std::vector<std::string>{"dim_graph"};
      if (i == 5 && bivariate) tasks.push_back("bivariate");
      return execute(build_spec(flags[i], verbs[i].name, tasks), g);
    }
  } catch (const fracdim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
