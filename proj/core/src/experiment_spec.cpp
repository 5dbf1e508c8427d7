#include "fracdim/experiment_spec.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "fracdim/error.hpp"
#include "fracdim/vector_fields.hpp"

namespace fracdim {

const std::map<std::string, std::string>& estimator_defaults() {
  static const std::map<std::string, std::string> table = {
      // box dimension of images and graphs
      {"dim_image.n_scales", "12"},
      {"dim_image.half_width", "0.15"},
      {"dim_graph.n_scales", "12"},
      {"dim_graph.half_width", "0.15"},
      {"dim_graph.min_columns", "16"},
      // level sets
      {"levelset.eps", "0.1"},
      {"levelset.level", "auto"},
      {"levelset.eta_factor", "1"},
      {"levelset.n_scales", "10"},
      {"levelset.min_cells", "4"},
      {"levelset.half_width", "0.15"},
      {"levelset.min_hit_fraction", "0.1"},
      {"levelset.eta0", "0.4"},
      {"levelset.halvings", "4"},
      // sup-increment tails
      {"tail.s", "0"},
      {"tail.t", "1"},
      {"tail.exponents", "1.6, 1.8, 2.0"},
      {"tail.n_xi", "12"},
      {"tail.q_hi", "0.95"},
      {"tail.q_lo", "0.05"},
      {"tail.r2_floor", "0.9"},
      {"tail.delta_r2", "-0.02"},
      {"tail.scaling_levels", "4"},
      {"tail.rank_floor", "0.8"},
      {"tail.min_ensemble", "1000"},
      // increment density and positivity
      {"density.s", "0.5"},
      {"density.t", "1"},
      {"density.n_centers", "41"},
      {"density.bins", "10"},
      {"density.mode_rel_tol", "0.1"},
      {"density.envelope_r2", "0.85"},
      {"density.positivity_t", "1"},
      {"density.window", "1"},
      {"density.lattice", "21"},
      {"density.min_ensemble", "10000"},
      // joint density of (X_s, X_t)
      {"bivariate.s", "0.5"},
      {"bivariate.t", "1"},
      {"bivariate.n_offsets", "12"},
      {"bivariate.envelope_r2", "0.8"},
      {"bivariate.closed_form_rel_tol", "0.15"},
      {"bivariate.min_ensemble", "10000"},
      // energy refinement dichotomy
      {"energy.gamma_offset", "0.13"},
      {"energy.grid_log2", "12"},
      {"energy.band_min", "3"},
      {"energy.band_skip", "3"},
      // mu_n moment trends
      {"mu.eps", "0.1"},
      {"mu.delta", "0.2"},
      {"mu.levels", "4, 16, 64, 256"},
      {"mu.grid_log2", "11"},
      {"mu.trend_tol", "0.1"},
      {"mu.contraction_max", "0.8"},
      // ensemble failure budget
      {"run.max_failure_fraction", "0.01"},
  };
  return table;
}

const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> tasks = {"generate", "solve",   "dim_image", "dim_graph",
                                                 "levelset", "tail",    "density",   "bivariate",
                                                 "energy",   "mu"};
  return tasks;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("value of '" + key + "' is not a number: " + v);
  return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("value of '" + key + "' is not a nonnegative integer: " + v);
  return out;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

} // namespace

std::vector<double> ExperimentSpec::initial_state() const {
  if (x0.size() == 1) return std::vector<double>(dim, x0.front());
  return x0;
}

std::string ExperimentSpec::param_text(const std::string& key) const {
  if (auto it = estimator_params.find(key); it != estimator_params.end()) return it->second;
  const auto& table = estimator_defaults();
  if (auto it = table.find(key); it != table.end()) return it->second;
  throw ConfigError("unknown estimator parameter: " + key);
}

double ExperimentSpec::param(const std::string& key) const { return to_double(key, param_text(key)); }

void validate_spec(ExperimentSpec& spec) {
  if (spec.name.empty()) throw ConfigError("experiment name is required");
  if (spec.name.find_first_of("/\\") != std::string::npos || spec.name == "." || spec.name == "..")
    throw ConfigError("experiment name must be a plain directory name");
  try {
    (void)HurstParam(spec.hurst);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (spec.dim == 0) throw ConfigError("dim must be positive");
  if (!is_power_of_two(spec.n_points))
    throw ConfigError("n_points must be a power of two, got " + std::to_string(spec.n_points));
  if (!(spec.t_end > spec.t_start) || spec.t_start < 0.0)
    throw ConfigError("t_range must satisfy 0 <= t_start < t_end");
  if (spec.fields.empty()) throw ConfigError("at least one field set is required");
  for (const auto& f : spec.fields)
    if (!is_catalog_field(f)) throw ConfigError("unknown field catalog name: " + f);
  if (spec.ensemble == 0) throw ConfigError("ensemble must be at least 1");
  if (spec.x0.size() != 1 && spec.x0.size() != spec.dim)
    throw ConfigError("x0 must be a single value or have dim entries");

  const HurstParam h(spec.hurst);
  if (spec.scheme_requested == "auto") {
    spec.scheme = scheme_for(h);
  } else if (spec.scheme_requested == "step2_davie") {
    spec.scheme = SchemeKind::step2_davie;
  } else if (spec.scheme_requested == "step3") {
    spec.scheme = SchemeKind::step3;
  } else {
    throw ConfigError("unknown scheme: " + spec.scheme_requested);
  }
  try {
    validate_scheme(spec.scheme, h);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  for (const auto& t : spec.tasks)
    if (std::find(known_tasks().begin(), known_tasks().end(), t) == known_tasks().end())
      throw ConfigError("unknown task: " + t);
  for (const auto& [k, v] : spec.estimator_params)
    if (!estimator_defaults().contains(k)) throw ConfigError("unknown estimator parameter: " + k);
}

ExperimentSpec parse_spec(std::string_view text) {
  ExperimentSpec spec;
  std::set<std::string> seen;
  std::string section;
  bool have_n = false;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (!seen.insert(key).second) throw ConfigError("duplicate key: " + key);

    if (key.find('.') != std::string::npos) {
      if (!estimator_defaults().contains(key)) throw ConfigError("unknown key: " + key);
      spec.estimator_params[key] = value;
    } else if (key == "name") {
      spec.name = value;
    } else if (key == "hurst") {
      spec.hurst = to_double(key, value);
    } else if (key == "dim") {
      spec.dim = to_unsigned(key, value);
    } else if (key == "n_points") {
      spec.n_points = to_unsigned(key, value);
      have_n = true;
    } else if (key == "t_range") {
      const auto parts = split_list(value);
      if (parts.size() != 2) throw ConfigError("t_range expects two values");
      spec.t_start = to_double(key, parts[0]);
      spec.t_end = to_double(key, parts[1]);
    } else if (key == "generator") {
      if (value == "circulant") spec.generator = GeneratorKind::circulant;
      else if (value == "cholesky") spec.generator = GeneratorKind::cholesky;
      else throw ConfigError("unknown generator: " + value);
    } else if (key == "fields") {
      spec.fields = split_list(value);
    } else if (key == "scheme") {
      spec.scheme_requested = value;
    } else if (key == "ensemble") {
      spec.ensemble = to_unsigned(key, value);
    } else if (key == "base_seed") {
      spec.base_seed = to_unsigned(key, value);
    } else if (key == "x0") {
      spec.x0.clear();
      for (const auto& p : split_list(value)) spec.x0.push_back(to_double(key, p));
    } else if (key == "tasks") {
      spec.tasks = split_list(value);
    } else if (key == "output_dir") {
      spec.output_dir = value;
    } else {
      throw ConfigError("unknown key: " + key);
    }
  }
  if (!have_n) throw ConfigError("n_points is required");
  validate_spec(spec);
  return spec;
}

ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

nlohmann::json spec_to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["hurst"] = spec.hurst;
  j["dim"] = spec.dim;
  j["n_points"] = spec.n_points;
  j["t_range"] = {spec.t_start, spec.t_end};
  j["generator"] = spec.generator == GeneratorKind::circulant ? "circulant" : "cholesky";
  j["fields"] = spec.fields;
  j["scheme_requested"] = spec.scheme_requested;
  j["scheme"] = spec.scheme == SchemeKind::step2_davie ? "step2_davie" : "step3";
  j["ensemble"] = spec.ensemble;
  j["base_seed"] = spec.base_seed;
  j["x0"] = spec.x0;
  j["tasks"] = spec.tasks;
  j["estimator_params"] = spec.estimator_params;
  j["output_dir"] = spec.output_dir;
  return j;
}

} // namespace fracdim
