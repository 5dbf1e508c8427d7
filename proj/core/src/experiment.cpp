#include "fracdim/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include <Eigen/Core>

#include "fracdim/density.hpp"
#include "fracdim/dimension.hpp"
#include "fracdim/ensemble.hpp"
#include "fracdim/error.hpp"
#include "fracdim/path_io.hpp"
#include "fracdim/simulation.hpp"
#include "fracdim/stats.hpp"

#ifndef FRACDIM_VERSION
#define FRACDIM_VERSION "unknown"
#endif

namespace fracdim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

class RunAborted : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

nlohmann::json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string short_fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      throw ConfigError("value of '" + key + "' is not a list of numbers: " + text);
    }
  }
  if (out.empty()) throw ConfigError("value of '" + key + "' is empty");
  return out;
}

std::vector<double> finite_only(const std::vector<std::optional<double>>& xs) {
  std::vector<double> out;
  for (const auto& x : xs)
    if (x && std::isfinite(*x)) out.push_back(*x);
  return out;
}

double median_or_nan(const std::vector<double>& xs) { return xs.empty() ? kNaN : median(xs); }

struct Context {
  const ExperimentSpec& spec;
  const RunOptions& options;
  const Simulator& sim;
  RunReport& report;
  std::filesystem::path dir;
  std::ostringstream estimates;
  double max_failure_fraction = 0.01;

  void row(const std::string& estimator, std::uint64_t seed, const std::string& param, double slope,
           double r2, double value) {
    estimates << estimator << ',' << fmt_double(spec.hurst) << ',' << spec.dim << ','
              << spec.n_points << ',' << seed << ',' << param << ',' << fmt_double(slope) << ','
              << fmt_double(r2) << ',' << fmt_double(value) << '\n';
  }

  void write_text(const std::string& file, const std::string& text) const {
    if (!options.write_artifacts) return;
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
    out << text;
  }

  // Runs fn for every member; members that throw are tallied and dropped.
  template <typename Fn>
  auto members(const std::string& task, Fn&& fn)
      -> std::vector<std::optional<std::invoke_result_t<Fn&, std::size_t>>> {
    using R = std::invoke_result_t<Fn&, std::size_t>;
    struct Slot {
      std::optional<R> value;
      std::string error;
    };
    auto slots = parallel_map(spec.ensemble, options.jobs, [&](std::size_t m) {
      Slot s;
      try {
        s.value.emplace(fn(m));
      } catch (const std::exception& e) {
        s.error = e.what();
      }
      return s;
    });
    std::vector<std::optional<R>> out;
    std::size_t failed = 0;
    for (std::size_t m = 0; m < slots.size(); ++m) {
      if (!slots[m].value) {
        ++failed;
        report.results["failures"].push_back(
            {{"task", task}, {"member", m}, {"seed", spec.member_seed(m)}, {"error", slots[m].error}});
      }
      out.push_back(std::move(slots[m].value));
    }
    report.members_run += spec.ensemble;
    report.members_failed += failed;
    if (static_cast<double>(failed) > max_failure_fraction * static_cast<double>(spec.ensemble))
      throw RunAborted(task + ": " + std::to_string(failed) + " of " + std::to_string(spec.ensemble) +
                       " members failed");
    return out;
  }
};

std::string member_file(const std::string& prefix, std::size_t m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%05zu.frd", m);
  return prefix + buf;
}

// ---------------------------------------------------------------------------

void task_generate(Context& ctx) {
  if (ctx.options.write_artifacts) std::filesystem::create_directories(ctx.dir / "paths");
  auto endpoints = ctx.members("generate", [&](std::size_t m) {
    const SamplePath p = ctx.sim.driver(m);
    if (ctx.options.write_artifacts) write_path_binary(ctx.dir / "paths" / member_file("driver", m), p);
    auto last = p.point(p.size() - 1);
    return std::vector<double>(last.begin(), last.end());
  });
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : endpoints) j.push_back(e ? nlohmann::json(*e) : nlohmann::json());
  ctx.report.results["generate"] = {{"endpoints", j}};
}

void task_solve(Context& ctx) {
  if (ctx.options.write_artifacts) std::filesystem::create_directories(ctx.dir / "paths");
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t k = 0; k < ctx.sim.field_count(); ++k) {
    const std::string& fname = ctx.sim.field(k).name();
    auto endpoints = ctx.members("solve", [&](std::size_t m) {
      const SamplePath p = ctx.sim.solution(m, k);
      if (ctx.options.write_artifacts) write_path_binary(ctx.dir / "paths" / member_file(fname, m), p);
      auto last = p.point(p.size() - 1);
      return std::vector<double>(last.begin(), last.end());
    });
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : endpoints) j.push_back(e ? nlohmann::json(*e) : nlohmann::json());
    out[fname] = {{"endpoints", j}};
  }
  ctx.report.results["solve"] = out;
}

void task_box_dimension(Context& ctx, bool graph) {
  const std::string task = graph ? "dim_graph" : "dim_image";
  const double h = ctx.spec.hurst;
  const double d = static_cast<double>(ctx.spec.dim);
  const double expected = graph ? std::min((1.0 - h) * d + 1.0, 1.0 / h) : std::min(d, 1.0 / h);
  const double hw = ctx.spec.param(task + ".half_width");
  const auto n_scales = static_cast<std::size_t>(ctx.spec.param(task + ".n_scales"));
  // Graph ladders start where the time axis holds at least min_columns cells.
  const double cap = graph ? (ctx.spec.t_end - ctx.spec.t_start) / ctx.spec.param("dim_graph.min_columns")
                           : std::numeric_limits<double>::infinity();
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t k = 0; k < ctx.sim.field_count(); ++k) {
    const std::string& fname = ctx.sim.field(k).name();
    auto est = ctx.members(task, [&](std::size_t m) {
      const SamplePath p = ctx.sim.solution(m, k);
      const PointCloud cloud = graph ? graph_cloud(p) : image_cloud(p);
      return box_dimension(cloud, default_scale_range(cloud, path_resolution(cloud), cap), n_scales);
    });
    std::vector<std::optional<double>> slopes;
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t m = 0; m < est.size(); ++m) {
      if (!est[m]) {
        slopes.emplace_back();
        per.push_back(nullptr);
        continue;
      }
      slopes.emplace_back(est[m]->slope);
      per.push_back({{"slope", num(est[m]->slope)}, {"r2", num(est[m]->r_squared)},
                     {"scales", est[m]->scales_used.size()}, {"saturated", est[m]->saturated}});
      ctx.row(task, ctx.spec.member_seed(m), fname, est[m]->slope, est[m]->r_squared, est[m]->slope);
    }
    const double med = median_or_nan(finite_only(slopes));
    out[fname] = {{"members", per}, {"median_slope", num(med)}, {"expected", expected}};
    const std::string claim = graph ? "dim Gr X([0,1]) = min{(1-H)d+1, 1/H} = " + short_fmt(expected)
                                    : "dim X([0,1]) = min{d, 1/H} = " + short_fmt(expected);
    Verdict v = window_verdict(task, claim, graph ? "graph dimension theorem" : "image dimension theorem",
                               med, expected - hw, expected + hw,
                               "+-" + short_fmt(hw) + " around " + short_fmt(expected) + ", ensemble median");
    v.detail = "fields " + fname;
    ctx.report.verdicts.push_back(v);
  }
  ctx.report.results[task] = out;
}

std::vector<double> level_point(const ExperimentSpec& spec, double shift) {
  const std::string text = spec.param_text("levelset.level");
  std::vector<double> x = spec.initial_state();
  if (text == "auto") {
    for (auto& v : x) v += shift;
    return x;
  }
  std::vector<double> given = parse_list("levelset.level", text);
  if (given.size() == 1) given.assign(spec.dim, given.front());
  if (given.size() != spec.dim) throw ConfigError("levelset.level has the wrong dimension");
  return given;
}

void task_levelset(Context& ctx) {
  const double h = ctx.spec.hurst;
  const double dh = static_cast<double>(ctx.spec.dim) * h;
  const double eps = ctx.spec.param("levelset.eps");
  const TimeGrid grid = ctx.spec.grid();
  const std::size_t first = grid.nearest_index(eps);
  nlohmann::json out = nlohmann::json::object();

  if (std::abs(dh - 1.0) < 1e-12) {
    Verdict v = window_verdict("levelset", "critical case dH = 1", "level-set theorem", kNaN, kNaN, kNaN,
                               "no prediction at dH = 1");
    ctx.report.verdicts.push_back(v);
    return;
  }

  for (std::size_t k = 0; k < ctx.sim.field_count(); ++k) {
    const std::string& fname = ctx.sim.field(k).name();
    if (dh < 1.0) {
      const std::vector<double> x = level_point(ctx.spec, 0.0);
      const double factor = ctx.spec.param("levelset.eta_factor");
      const auto n_scales = static_cast<std::size_t>(ctx.spec.param("levelset.n_scales"));
      const auto min_cells = static_cast<std::size_t>(ctx.spec.param("levelset.min_cells"));
      struct Member {
        bool hit = false;
        double slope = kNaN;
        double r2 = kNaN;
        std::size_t points = 0;
        double eta = 0.0;
      };
      auto res = ctx.members("levelset", [&](std::size_t m) {
        const SamplePath p = ctx.sim.solution(m, k).slice(first, grid.n_points() - 1);
        const double eta = factor * tube_floor(p);
        const LevelSet set = extract_level_set(p, x, eta);
        Member r;
        r.eta = eta;
        r.points = set.times.size();
        if (set.times.empty()) return r;
        const ScaleRange range = level_set_scale_range(set);
        const PointCloud cloud = time_cloud(set);
        if (box_count(cloud, range.eps_min) < min_cells) return r;
        const DimensionEstimate est = box_dimension(cloud, range, n_scales);
        r.hit = true;
        r.slope = est.slope;
        r.r2 = est.r_squared;
        return r;
      });
      std::vector<double> slopes;
      std::size_t hits = 0, valid = 0;
      nlohmann::json per = nlohmann::json::array();
      for (std::size_t m = 0; m < res.size(); ++m) {
        if (!res[m]) {
          per.push_back(nullptr);
          continue;
        }
        ++valid;
        const Member& r = *res[m];
        per.push_back({{"hit", r.hit}, {"slope", num(r.slope)}, {"r2", num(r.r2)}, {"points", r.points},
                       {"eta", r.eta}});
        if (r.hit) {
          ++hits;
          slopes.push_back(r.slope);
          ctx.row("levelset", ctx.spec.member_seed(m), fname, r.slope, r.r2, r.eta);
        }
      }
      const double fraction = valid ? static_cast<double>(hits) / static_cast<double>(valid) : kNaN;
      const double med = median_or_nan(slopes);
      const double expected = 1.0 - dh;
      const double hw = ctx.spec.param("levelset.half_width");
      const double min_frac = ctx.spec.param("levelset.min_hit_fraction");
      out[fname] = {{"branch", "dH<1"}, {"members", per}, {"hit_fraction", num(fraction)},
                    {"median_slope", num(med)}, {"expected", expected}};
      Verdict v1 = window_verdict("levelset", "dim L_x = 1 - dH = " + short_fmt(expected) + " with positive probability",
                                  "level-set theorem, dH < 1", med, expected - hw, expected + hw,
                                  "+-" + short_fmt(hw) + ", median over hitting members");
      v1.detail = "fields " + fname + ", " + std::to_string(hits) + " hitting members";
      Verdict v2 = window_verdict("levelset", "L_x is non-empty with positive probability",
                                  "level-set theorem, dH < 1", fraction, min_frac, 1.0,
                                  "hit fraction >= " + short_fmt(min_frac));
      v2.detail = "fields " + fname;
      ctx.report.verdicts.push_back(v1);
      ctx.report.verdicts.push_back(v2);
    } else {
      const std::vector<double> x = level_point(ctx.spec, 0.5);
      const double eta0 = ctx.spec.param("levelset.eta0");
      const auto halvings = static_cast<std::size_t>(ctx.spec.param("levelset.halvings"));
      auto res = ctx.members("levelset", [&](std::size_t m) {
        const SamplePath p = ctx.sim.solution(m, k).slice(first, grid.n_points() - 1);
        std::vector<int> hit;
        for (std::size_t j = 0; j <= halvings; ++j) {
          const LevelSet set = extract_level_set(p, x, eta0 * std::ldexp(1.0, -static_cast<int>(j)));
          hit.push_back(set.times.empty() ? 0 : 1);
        }
        return hit;
      });
      std::vector<double> fractions(halvings + 1, 0.0);
      std::size_t valid = 0;
      for (const auto& r : res) {
        if (!r) continue;
        ++valid;
        for (std::size_t j = 0; j <= halvings; ++j) fractions[j] += (*r)[j];
      }
      std::size_t decreases = 0;
      for (auto& f : fractions) f = valid ? f / static_cast<double>(valid) : kNaN;
      for (std::size_t j = 0; j < halvings; ++j)
        if (fractions[j + 1] < fractions[j]) ++decreases;
      nlohmann::json fr = nlohmann::json::array();
      for (double f : fractions) fr.push_back(num(f));
      out[fname] = {{"branch", "dH>1"}, {"eta0", eta0}, {"hit_fractions", fr}, {"strict_decreases", decreases}};
      Verdict v = window_verdict("levelset", "L_x is empty a.s. when dH > 1: tube-hit fraction vanishes as eta -> 0",
                                 "level-set theorem, dH > 1", static_cast<double>(decreases),
                                 static_cast<double>(halvings), static_cast<double>(halvings),
                                 "strict decrease across all " + std::to_string(halvings) + " halvings");
      v.detail = "fields " + fname + ", hit fractions " + fr.dump();
      if (valid == 0) v.status = VerdictStatus::untestable;
      ctx.report.verdicts.push_back(v);
    }
  }
  ctx.report.results["levelset"] = out;
}

void task_tail(Context& ctx) {
  const double s = ctx.spec.param("tail.s"), t = ctx.spec.param("tail.t");
  const double h = ctx.spec.hurst;
  const double a_star = std::min(2.0 * h + 1.0, 2.0);
  const auto exponents = parse_list("tail.exponents", ctx.spec.param_text("tail.exponents"));
  const auto levels = static_cast<std::size_t>(ctx.spec.param("tail.scaling_levels"));
  const std::string anchor = "sup-increment tail bound exp(-c xi^{min(2H+1,2)} / (t-s)^{2H})";
  if (ctx.spec.ensemble < static_cast<std::size_t>(ctx.spec.param("tail.min_ensemble"))) {
    ctx.report.verdicts.push_back(window_verdict("tail", "tail exponent min(2H+1,2)", anchor, kNaN, kNaN, kNaN,
                                                 "ensemble below tail.min_ensemble"));
    return;
  }
  std::vector<std::pair<double, double>> intervals;
  for (std::size_t j = 0; j < levels; ++j) intervals.emplace_back(s, s + (t - s) * std::ldexp(1.0, -static_cast<int>(j)));

  auto res = ctx.members("tail", [&](std::size_t m) {
    const SamplePath p = ctx.sim.solution(m, 0);
    std::vector<double> v;
    for (const auto& iv : intervals) v.push_back(sup_increment(p, iv.first, iv.second));
    return v;
  });
  std::vector<std::vector<double>> samples(levels);
  for (const auto& r : res)
    if (r)
      for (std::size_t j = 0; j < levels; ++j) samples[j].push_back((*r)[j]);

  const auto xi = quantile_xi_grid(samples[0], static_cast<std::size_t>(ctx.spec.param("tail.n_xi")),
                                   ctx.spec.param("tail.q_hi"), ctx.spec.param("tail.q_lo"));
  const TailCurve curve = tail_curve(samples[0], xi, s, t);
  ctx.write_text("tail_curve.csv", tail_curve_csv(curve));
  const ExponentFit fit = fit_tail_exponent(curve, exponents);

  nlohmann::json fits = nlohmann::json::array();
  for (std::size_t k = 0; k < fit.exponents.size(); ++k)
    fits.push_back({{"exponent", fit.exponents[k]}, {"slope", fit.slopes[k]}, {"r2", fit.r2s[k]}});

  const double r2_star = fit.r2_of(a_star);
  std::size_t idx_star = 0;
  while (std::abs(fit.exponents[idx_star] - a_star) > 1e-12) ++idx_star;
  const double slope_star = fit.slopes[idx_star];
  const double r2_floor = ctx.spec.param("tail.r2_floor");
  const double delta = ctx.spec.param("tail.delta_r2");

  if (a_star >= 2.0) {
    Verdict v = window_verdict("tail", "exponent ladder selects min(2H+1,2) = 2", anchor, fit.best_exponent,
                               a_star, a_star, "best-R^2 candidate must equal 2");
    ctx.report.verdicts.push_back(v);
  } else {
    const double dr2 = r2_star - fit.r2_of(2.0);
    Verdict v = window_verdict("tail", "xi^" + short_fmt(a_star) + " fits at least as well as xi^2", anchor, dr2,
                               delta, kInf, "R^2 difference >= " + short_fmt(delta));
    ctx.report.verdicts.push_back(v);
  }
  Verdict vr = window_verdict("tail", "log P linear in xi^" + short_fmt(a_star) + " with negative slope", anchor,
                              slope_star < 0.0 ? r2_star : -1.0, r2_floor, 1.0, "R^2 >= " + short_fmt(r2_floor));
  ctx.report.verdicts.push_back(vr);

  const double xi_fixed = median(samples[levels - 1]);
  std::vector<double> lengths;
  for (const auto& iv : intervals) lengths.push_back(iv.second - iv.first);
  const TimeScaling sc = scaling_from_samples(samples, lengths, xi_fixed, h);
  const double rank_floor = ctx.spec.param("tail.rank_floor");
  Verdict vs = window_verdict("tail", "exceedance grows with xi^2 / (t-s)^{2H}", anchor, sc.rank_correlation,
                              rank_floor, 1.0, "rank correlation >= " + short_fmt(rank_floor));
  vs.detail = std::to_string(sc.inversions) + " inversions across " + std::to_string(levels) + " halvings";
  ctx.report.verdicts.push_back(vs);

  nlohmann::json lp = nlohmann::json::array(), sl = nlohmann::json::array();
  for (double x : curve.log_probs) lp.push_back(num(x));
  for (double x : sc.log_probs) sl.push_back(num(x));
  ctx.report.results["tail"] = {{"xi", curve.xi_values},         {"log_probs", lp},
                                {"fits", fits},                  {"best_exponent", fit.best_exponent},
                                {"expected_exponent", a_star},   {"scaling_lengths", sc.lengths},
                                {"scaling_log_probs", sl},       {"scaling_xi", xi_fixed},
                                {"rank_correlation", num(sc.rank_correlation)},
                                {"inversions", sc.inversions}};
  ctx.row("tail", ctx.spec.base_seed, "exponent", slope_star, r2_star, fit.best_exponent);
}

std::vector<std::vector<double>> member_points(Context& ctx, const std::string& task, std::vector<double> times) {
  const TimeGrid grid = ctx.spec.grid();
  std::vector<std::size_t> idx;
  for (double t : times) idx.push_back(grid.nearest_index(t));
  auto res = ctx.members(task, [&](std::size_t m) {
    const SamplePath p = ctx.sim.solution(m, 0);
    std::vector<double> v;
    for (auto i : idx) {
      auto pt = p.point(i);
      v.insert(v.end(), pt.begin(), pt.end());
    }
    return v;
  });
  std::vector<std::vector<double>> out;
  for (auto& r : res)
    if (r) out.push_back(std::move(*r));
  return out;
}

bool identity_first(const ExperimentSpec& spec) { return spec.fields.front() == "identity"; }

double gaussian_density(const std::vector<double>& z, double var) {
  double q = 0.0;
  for (double v : z) q += v * v;
  const double d = static_cast<double>(z.size());
  return std::exp(-0.5 * q / var) / std::pow(2.0 * std::numbers::pi * var, 0.5 * d);
}

void task_density(Context& ctx) {
  const std::size_t d = ctx.spec.dim;
  const double h = ctx.spec.hurst;
  const double s = ctx.spec.param("density.s"), t = ctx.spec.param("density.t");
  const double tp = ctx.spec.param("density.positivity_t");
  const std::string anchor = "increment density bound C (t-s)^{-dH} exp(-|z|^{min(2H+1,2)} / C(t-s)^{2H})";
  if (ctx.spec.ensemble < static_cast<std::size_t>(ctx.spec.param("density.min_ensemble"))) {
    ctx.report.verdicts.push_back(window_verdict("density", "increment density decay", anchor, kNaN, kNaN, kNaN,
                                                 "ensemble below density.min_ensemble"));
    return;
  }
  const auto pts = member_points(ctx, "density", {s, t, tp});
  std::vector<double> incr, marg;
  for (const auto& r : pts)
    for (std::size_t c = 0; c < d; ++c) {
      incr.push_back(r[d + c] - r[c]);
      marg.push_back(r[2 * d + c]);
    }

  // Centers on the coordinate axes out to the 99.5% radius of the samples.
  std::vector<double> radii;
  for (std::size_t i = 0; i < incr.size() / d; ++i) {
    double q = 0.0;
    for (std::size_t c = 0; c < d; ++c) q += incr[i * d + c] * incr[i * d + c];
    radii.push_back(std::sqrt(q));
  }
  const double rmax = quantile(radii, 0.995);
  const auto nc = static_cast<std::size_t>(ctx.spec.param("density.n_centers"));
  std::vector<double> centers;
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t k = 0; k < nc; ++k) {
      const double z = -rmax + 2.0 * rmax * static_cast<double>(k) / static_cast<double>(nc - 1);
      if (c > 0 && std::abs(z) < 1e-15) continue;
      for (std::size_t e = 0; e < d; ++e) centers.push_back(e == c ? z : 0.0);
    }
  DensityEstimate est = kde_evaluate(incr, d, centers, ctx.options.jobs);
  est.s = s;
  est.t = t;
  ctx.write_text("density.csv", density_csv(est));
  const EnvelopeFit env = increment_decay_fit(est, h, static_cast<std::size_t>(ctx.spec.param("density.bins")));
  const double r2_floor = ctx.spec.param("density.envelope_r2");
  const double a = std::min(2.0 * h + 1.0, 2.0);
  Verdict v1 = window_verdict("density", "log p(z) decays linearly in |z|^" + short_fmt(a), anchor,
                              env.slope < 0.0 ? env.r_squared : -1.0, r2_floor, 1.0,
                              "upper-decile envelope R^2 >= " + short_fmt(r2_floor) + " with negative slope");
  v1.detail = "slope " + short_fmt(env.slope);
  ctx.report.verdicts.push_back(v1);
  nlohmann::json j = {{"bandwidth", est.bandwidth}, {"envelope_slope", env.slope}, {"envelope_r2", env.r_squared},
                      {"centers", est.centers},    {"values", est.values}};

  if (identity_first(ctx.spec)) {
    const std::vector<double> zero(d, 0.0);
    const double dens0 = kde_evaluate(incr, d, zero, ctx.options.jobs).values.front();
    const double exact = gaussian_density(zero, std::pow(t - s, 2.0 * h));
    const double rel = std::abs(dens0 - exact) / exact;
    const double tol = ctx.spec.param("density.mode_rel_tol");
    Verdict v = window_verdict("density", "identity fields: increment density at 0 matches the Gaussian law",
                               "identity-field reduction", rel, 0.0, tol, "relative error <= " + short_fmt(tol));
    ctx.report.verdicts.push_back(v);
    j["mode_estimate"] = dens0;
    j["mode_exact"] = exact;
  }

  const double w = ctx.spec.param("density.window");
  const auto per_axis = static_cast<std::size_t>(ctx.spec.param("density.lattice"));
  std::vector<double> lo = ctx.spec.initial_state(), hi = lo;
  for (std::size_t c = 0; c < d; ++c) {
    lo[c] -= w;
    hi[c] += w;
  }
  const PositivityResult pos = positivity_from_samples(marg, d, lo, hi, per_axis, ctx.options.jobs);
  Verdict vp = window_verdict("density", "p_t(x, y) > 0 on the scanned window", "density positivity theorem",
                              pos.min_value, pos.resolution_floor, kInf,
                              "minimum above the single-sample resolution floor");
  if (pos.verdict == "untestable") vp.status = VerdictStatus::untestable;
  vp.detail = std::to_string(pos.lattice_points) + " lattice points";
  ctx.report.verdicts.push_back(vp);
  j["positivity"] = {{"min", pos.min_value}, {"floor", pos.resolution_floor}, {"verdict", pos.verdict}};
  j["verdict_block"] = verdict_block("increment density decay", a, env.slope, env.r_squared, to_string(v1.status));
  ctx.report.results["density"] = j;
}

void task_bivariate(Context& ctx) {
  const std::size_t d = ctx.spec.dim;
  const double h = ctx.spec.hurst;
  const double s = ctx.spec.param("bivariate.s"), t = ctx.spec.param("bivariate.t");
  const std::string anchor = "joint density bound exp(-|z1-z2|^{2 gamma} / C|t-s|^{2 gamma^2})";
  if (ctx.spec.ensemble < static_cast<std::size_t>(ctx.spec.param("bivariate.min_ensemble"))) {
    ctx.report.verdicts.push_back(window_verdict("bivariate", "joint density decay", anchor, kNaN, kNaN, kNaN,
                                                 "ensemble below bivariate.min_ensemble"));
    return;
  }
  const auto pts = member_points(ctx, "bivariate", {s, t});
  std::vector<double> xs, xt, incr;
  for (const auto& r : pts)
    for (std::size_t c = 0; c < d; ++c) {
      xs.push_back(r[c]);
      xt.push_back(r[d + c]);
      if (c == 0) incr.push_back(r[d] - r[0]);
    }
  const double sd = std::sqrt(variance(incr));
  const auto n_off = static_cast<std::size_t>(ctx.spec.param("bivariate.n_offsets"));
  std::vector<double> offsets;
  for (std::size_t k = 0; k < n_off; ++k) offsets.push_back(2.5 * sd * static_cast<double>(k) / static_cast<double>(n_off - 1));
  const BivariateDecay bd = bivariate_from_samples(xs, xt, d, s, t, h, offsets, ctx.options.jobs);
  const double r2_floor = ctx.spec.param("bivariate.envelope_r2");
  Verdict v1 = window_verdict("bivariate", "log joint density decays linearly in |z1-z2|^{2 gamma}, gamma = 0.9H",
                              anchor, bd.envelope.slope < 0.0 ? bd.envelope.r_squared : -1.0, r2_floor, 1.0,
                              "envelope R^2 >= " + short_fmt(r2_floor) + " with negative slope");
  v1.detail = "slope " + short_fmt(bd.envelope.slope);
  ctx.report.verdicts.push_back(v1);

  nlohmann::json vals = nlohmann::json::array();
  for (const auto& p : bd.points) vals.push_back({p.offset, p.value});
  nlohmann::json j = {{"anchor_point", bd.anchor}, {"points", vals}, {"gamma", bd.gamma},
                      {"envelope_slope", bd.envelope.slope}, {"envelope_r2", bd.envelope.r_squared}};

  if (identity_first(ctx.spec)) {
    // (X_s, X_t) per coordinate is bivariate normal around x0.
    const std::vector<double> x0 = ctx.spec.initial_state();
    const HurstParam hp(h);
    const double vs = covariance(s, s, hp), vt = covariance(t, t, hp), cst = covariance(s, t, hp);
    const double det = vs * vt - cst * cst;
    auto exact = [&](double off) {
      double p = 1.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double a = bd.anchor[c] - x0[c];
        const double b = a + (c == 0 ? off : 0.0);
        const double q = (vt * a * a - 2.0 * cst * a * b + vs * b * b) / det;
        p *= std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
      }
      return p;
    };
    std::vector<double> check;
    for (std::size_t k = 0; k < 5; ++k) check.push_back(1.5 * sd * static_cast<double>(k) / 4.0);
    const BivariateDecay cf = bivariate_from_samples(xs, xt, d, s, t, h, check, ctx.options.jobs);
    double worst = 0.0;
    for (const auto& p : cf.points) worst = std::max(worst, std::abs(p.value - exact(p.offset)) / exact(p.offset));
    const double tol = ctx.spec.param("bivariate.closed_form_rel_tol");
    ctx.report.verdicts.push_back(window_verdict("bivariate", "identity fields: joint density matches the Gaussian law",
                                                 "identity-field reduction", worst, 0.0, tol,
                                                 "max relative error over 5 offsets <= " + short_fmt(tol)));
    j["closed_form_max_rel_error"] = worst;
  }
  ctx.report.results["bivariate"] = j;
}

void task_energy(Context& ctx) {
  const double h = ctx.spec.hurst;
  const double crit = std::min(static_cast<double>(ctx.spec.dim), 1.0 / h);
  const double off = ctx.spec.param("energy.gamma_offset");
  const auto grid_log2 = static_cast<int>(ctx.spec.param("energy.grid_log2"));
  const auto band_min = static_cast<std::size_t>(ctx.spec.param("energy.band_min"));
  const auto band_skip = static_cast<std::size_t>(ctx.spec.param("energy.band_skip"));
  const std::size_t stride =
      ctx.spec.n_points > (std::size_t{1} << grid_log2) ? ctx.spec.n_points >> grid_log2 : 1;
  const std::vector<double> gammas{crit - off, crit + off};
  const std::array<double, 2> window{ctx.spec.t_start, ctx.spec.t_end};

  auto res = ctx.members("energy", [&](std::size_t m) {
    const SamplePath p = ctx.sim.solution(m, 0).subsample(stride);
    std::vector<std::vector<double>> bands;
    for (double g : gammas) bands.push_back(energy_lag_bands(p, g, window));
    return bands;
  });
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    std::vector<double> mean;
    std::size_t valid = 0;
    for (const auto& r : res) {
      if (!r) continue;
      const auto& b = (*r)[g];
      if (mean.empty()) mean.assign(b.size(), 0.0);
      for (std::size_t j = 0; j < b.size(); ++j) mean[j] += b[j];
      ++valid;
    }
    for (double& v : mean) v /= static_cast<double>(valid);
    std::vector<double> lj, lc;
    for (std::size_t j = band_min; j + band_skip < mean.size(); ++j) {
      lj.push_back(static_cast<double>(j));
      lc.push_back(std::log2(mean[j]));
    }
    const bool fit_ok = lj.size() >= 3 && std::all_of(lc.begin(), lc.end(), [](double x) { return std::isfinite(x); });
    const double slope = fit_ok ? linear_fit(lj, lc).slope : kNaN;
    nlohmann::json mb = nlohmann::json::array();
    for (double v : mean) mb.push_back(num(v));
    out["gamma_" + short_fmt(gammas[g])] = {{"gamma", gammas[g]}, {"mean_band_energy", mb}, {"band_slope", num(slope)},
                                            {"bands_fitted", {band_min, band_min + lj.size() - 1}}};
    ctx.row("energy", ctx.spec.base_seed, "gamma=" + short_fmt(gammas[g]), slope, kNaN, kNaN);
    const bool below = g == 0;
    Verdict v = window_verdict(
        "energy",
        below ? "E_gamma finite for gamma = " + short_fmt(gammas[g]) + " < min{d, 1/H}: small-lag contributions vanish"
              : "E_gamma infinite for gamma = " + short_fmt(gammas[g]) + " > min{d, 1/H}: small-lag contributions grow",
        "energy criterion in the image-dimension lower bound", slope, below ? -kInf : 0.0, below ? 0.0 : kInf,
        "log2-slope of the ensemble-mean energy per lag octave, sign only");
    v.detail = "lag octaves " + std::to_string(band_min) + " .. " + std::to_string(band_min + lj.size() - 1) +
               " on a 2^" + std::to_string(grid_log2) + " grid";
    ctx.report.verdicts.push_back(v);
  }
  ctx.report.results["energy"] = out;
}

// Largest ratio between successive local log-log slopes of a sequence.
// A bounded increasing sequence has shrinking slopes; power growth keeps them
// constant. Slopes at or below `flat` are treated as zero.
double growth_contraction(const std::vector<double>& lx, const std::vector<double>& ly, double flat) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 2 < lx.size(); ++k) {
    const double a = (ly[k + 1] - ly[k]) / (lx[k + 1] - lx[k]);
    const double b = (ly[k + 2] - ly[k + 1]) / (lx[k + 2] - lx[k + 1]);
    if (b <= flat) continue;
    worst = std::max(worst, a <= flat ? kInf : b / a);
  }
  return worst;
}

void task_mu(Context& ctx) {
  const double h = ctx.spec.hurst;
  const double d = static_cast<double>(ctx.spec.dim);
  const double eps = ctx.spec.param("mu.eps");
  const double delta = ctx.spec.param("mu.delta");
  const double gamma = 1.0 - (1.0 + delta) * h * d;
  const auto levels = parse_list("mu.levels", ctx.spec.param_text("mu.levels"));
  const auto grid_log2 = static_cast<int>(ctx.spec.param("mu.grid_log2"));
  const std::string anchor = "mu_n moment bounds E|mu_n| >= c1, E|mu_n|^2 <= c2, E|mu_n|_gamma <= c3";
  if (!(gamma > 0.0)) {
    ctx.report.verdicts.push_back(window_verdict("mu", "mu_n moment bounds", anchor, kNaN, kNaN, kNaN,
                                                 "gamma = 1 - (1+delta)Hd must be positive"));
    return;
  }
  const std::size_t stride =
      ctx.spec.n_points > (std::size_t{1} << grid_log2) ? ctx.spec.n_points >> grid_log2 : 1;
  const std::vector<double> x = level_point(ctx.spec, 0.0);
  const std::array<double, 2> window{eps, ctx.spec.t_end};
  auto res = ctx.members("mu", [&](std::size_t m) {
    const SamplePath p = ctx.sim.solution(m, 0).subsample(stride);
    std::vector<MuMeasure> v;
    for (double n : levels) v.push_back(mu_measure(p, x, n, gamma, window));
    return v;
  });
  std::vector<double> mass(levels.size(), 0.0), mass2(levels.size(), 0.0), energy(levels.size(), 0.0);
  std::size_t valid = 0;
  for (std::size_t m = 0; m < res.size(); ++m) {
    if (!res[m]) continue;
    ++valid;
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const MuMeasure& mu = (*res[m])[k];
      mass[k] += mu.mass;
      mass2[k] += mu.mass * mu.mass;
      energy[k] += mu.gamma_energy;
      ctx.row("mu", ctx.spec.member_seed(m), "n=" + short_fmt(levels[k]), kNaN, kNaN, mu.mass);
    }
  }
  std::vector<double> ln, lm, lm2, le;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    mass[k] /= static_cast<double>(valid);
    mass2[k] /= static_cast<double>(valid);
    energy[k] /= static_cast<double>(valid);
    ln.push_back(std::log(levels[k]));
    lm.push_back(std::log(mass[k]));
    lm2.push_back(std::log(mass2[k]));
    le.push_back(std::log(energy[k]));
  }
  const double tol = ctx.spec.param("mu.trend_tol");
  const double contraction = ctx.spec.param("mu.contraction_max");
  const double s_mass = linear_fit(ln, lm).slope;
  const double g_mass2 = growth_contraction(ln, lm2, tol);
  const double g_energy = growth_contraction(ln, le, tol);
  const std::string tl = "log-log trend across n";
  const std::string tc = "ratio of successive local log-log slopes <= " + short_fmt(contraction) +
                         " (slopes under " + short_fmt(tol) + " count as flat)";
  ctx.report.verdicts.push_back(window_verdict("mu", "E mu_n([eps,1]) bounded below in n", anchor, s_mass, -tol, kInf,
                                               tl + " >= -" + short_fmt(tol)));
  ctx.report.verdicts.push_back(window_verdict("mu", "E mu_n([eps,1])^2 bounded above in n", anchor, g_mass2, -kInf,
                                               contraction, tc));
  ctx.report.verdicts.push_back(window_verdict("mu", "E of the gamma-energy of mu_n bounded above in n, gamma = " +
                                                         short_fmt(gamma),
                                               anchor, g_energy, -kInf, contraction, tc));
  ctx.report.results["mu"] = {{"levels", levels}, {"gamma", gamma},        {"mean_mass", mass},
                              {"mean_mass_sq", mass2}, {"mean_energy", energy}, {"trend_mass", s_mass},
                              {"contraction_mass_sq", num(g_mass2)}, {"contraction_energy", num(g_energy)}};
}

} // namespace

std::filesystem::path output_directory(const ExperimentSpec& spec, const RunOptions& options) {
  const std::filesystem::path root = spec.output_dir.empty() ? options.output_root : std::filesystem::path(spec.output_dir);
  return root / spec.name;
}

RunReport run(const ExperimentSpec& spec_in, std::span<const std::string> tasks, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (tasks.empty()) throw ConfigError("no tasks to run");
  ExperimentSpec spec = spec_in;
  validate_spec(spec);
  for (const auto& t : tasks)
    if (std::find(known_tasks().begin(), known_tasks().end(), t) == known_tasks().end())
      throw ConfigError("unknown task: " + t);

  RunReport report;
  report.spec = spec_to_json(spec);
  report.spec["tasks_run"] = std::vector<std::string>(tasks.begin(), tasks.end());
  report.versions = {{"fracdim", FRACDIM_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
  report.results["failures"] = nlohmann::json::array();

  const Simulator sim(spec);
  Context ctx{spec, options, sim, report, output_directory(spec, options), {}, spec.param("run.max_failure_fraction")};
  if (options.write_artifacts) std::filesystem::create_directories(ctx.dir);
  ctx.estimates << "estimator,H,d,n_points,seed,param,slope,r2,value\n";

  try {
    for (const auto& t : tasks) {
      if (t == "generate") task_generate(ctx);
      else if (t == "solve") task_solve(ctx);
      else if (t == "dim_image") task_box_dimension(ctx, false);
      else if (t == "dim_graph") task_box_dimension(ctx, true);
      else if (t == "levelset") task_levelset(ctx);
      else if (t == "tail") task_tail(ctx);
      else if (t == "density") task_density(ctx);
      else if (t == "bivariate") task_bivariate(ctx);
      else if (t == "energy") task_energy(ctx);
      else if (t == "mu") task_mu(ctx);
    }
  } catch (const RunAborted& e) {
    report.aborted = true;
    report.abort_reason = e.what();
  }
  ctx.write_text("estimates.csv", ctx.estimates.str());
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (options.write_artifacts) write_report(report, ctx.dir);
  return report;
}

RunReport run(const ExperimentSpec& spec, const RunOptions& options) { return run(spec, spec.tasks, options); }

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const RenderedReport r = report_render(report);
  std::ofstream(dir / "report.txt", std::ios::binary) << r.text;
  std::ofstream(dir / "report.json", std::ios::binary) << r.json.dump(2) << '\n';
}

} // namespace fracdim
