// sirbass command-line driver: simulate, solve, formula, compare, converge.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include <sirbass/sirbass.hpp>

namespace fs = std::filesystem;
using namespace sirbass;

namespace {

enum Exit { kOk = 0, kValidation = 1, kTolerance = 2, kIo = 3 };

struct Options {
  std::string config, out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<long> replications;
  std::optional<double> dt, tolerance;
  std::vector<double> dx_list;
  std::string formula_id;
  std::vector<std::string> params;
  std::vector<long> ks;
  std::vector<double> ts;
  std::vector<std::string> argv;
};

void prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::ios_base::failure("cannot create output directory " + dir);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_manifest(const Options& o, const std::string& command, std::optional<std::uint64_t> seed, double seconds) {
  json m{{"command", command},
         {"config", o.config},
         {"seed", seed ? json(*seed) : json(nullptr)},
         {"output_dir", o.out},
         {"tool_version", kVersion},
         {"wall_clock_seconds", seconds},
         {"arguments", o.argv}};
  write_json(fs::path(o.out) / "manifest.json", m);
}

json load_config(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  return read_json_file(o.config);
}

SimulationConfig simulation_settings(const json& cfg, const Options& o) {
  SimulationConfig sc = cfg.contains("simulation") ? simulation_from_json(cfg["simulation"]) : SimulationConfig{};
  if (o.seed) sc.seed = *o.seed;
  if (o.replications) sc.replications = *o.replications;
  if (o.dt) sc.dt = *o.dt;
  return sc;
}

SolverConfig solver_settings(const json& cfg) {
  SolverConfig sc;
  if (cfg.contains("solver")) {
    detail::reject_unknown(cfg["solver"], {"h"}, "solver");
    sc.h = detail::field_or(cfg["solver"], "h", 0.0);
  }
  return sc;
}

std::vector<double> times_from(const json& cfg, const char* key, const Scenario& s) {
  if (cfg.contains(key)) return cfg[key].get<std::vector<double>>();
  return make_time_grid(s.horizon, s.grid_step);
}

// ---- simulate / solve ----------------------------------------------------------

int cmd_simulate(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const json cfg = load_config(o);
  detail::reject_unknown(cfg, {"scenario", "simulation", "times", "front_times"}, "simulate config");
  const Scenario s = scenario_from_json(cfg.at("scenario"));
  const auto sc = simulation_settings(cfg, o);
  const auto times = times_from(cfg, "times", s);
  const auto est = estimate_marginals(s, sc, times);
  prepare_out(o.out);
  auto table = csv::estimate_table(est);
  table.meta.emplace_back("config", o.config);
  csv::write_file((fs::path(o.out) / "estimate.csv").string(), table);
  json side = to_json_value(sc);
  if (cfg.contains("front_times")) {
    const auto ft = cfg["front_times"].get<std::vector<double>>();
    const auto fs_ = front_statistics(s, sc, ft);
    csv::write_file((fs::path(o.out) / "front.csv").string(), csv::front_table(fs_));
    side["front_mean"] = fs_.mean;
    side["front_variance"] = fs_.variance;
  }
  write_json(fs::path(o.out) / "estimate.json", side);
  write_manifest(o, "simulate", sc.seed,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return kOk;
}

int cmd_solve(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const json cfg = load_config(o);
  detail::reject_unknown(cfg, {"scenario", "solver", "times"}, "solve config");
  const Scenario s = scenario_from_json(cfg.at("scenario"));
  auto sc = solver_settings(cfg);
  if (cfg.contains("times")) sc.output_times = cfg["times"].get<std::vector<double>>();
  const auto sol = solve(s, sc);
  prepare_out(o.out);
  auto table = csv::solution_table(sol);
  table.meta.emplace_back("config", o.config);
  csv::write_file((fs::path(o.out) / "solution.csv").string(), table);
  write_manifest(o, "solve", std::nullopt,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return kOk;
}

// ---- formula -------------------------------------------------------------------

int cmd_formula(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& f = find_formula(o.formula_id);
  FormulaParams params;
  for (const auto& kv : o.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--param expects name=value, got '" + kv + "'", {}, {});
    try {
      params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("--param value is not a number: '" + kv + "'", {}, {});
    }
  }
  const std::vector<long> ks = o.ks.empty() ? std::vector<long>{1} : o.ks;
  if (o.ts.empty()) throw ValidationError("formula needs at least one --t", {}, {});
  csv::Table t;
  t.meta = {{"schema", "formula"}, {"units", "t in model time; value as defined by the formula id"}};
  for (const auto& [k, v] : params) t.meta.emplace_back("param " + k, csv::num(v));
  t.columns = {"formula", "k", "t", "value"};
  for (long k : ks)
    for (double tt : o.ts) t.rows.push_back({f.id, std::to_string(k), csv::num(tt), csv::num(f.eval(params, k, tt))});
  prepare_out(o.out);
  csv::write_file((fs::path(o.out) / "formula.csv").string(), t);
  csv::write(std::cout, t);
  write_manifest(o, "formula", std::nullopt,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return kOk;
}

// ---- compare -------------------------------------------------------------------

// (t, k, state) -> (value, stderr)
struct Series {
  std::string label;
  std::map<std::tuple<int, int, char>, std::pair<double, double>> cells;  // key t index into times
  std::vector<double> times;
};

int time_index(std::vector<double>& times, double t) {
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return static_cast<int>(i);
  times.push_back(t);
  return static_cast<int>(times.size()) - 1;
}

Series from_table(const csv::Table& tab, const std::string& label) {
  Series s;
  s.label = label;
  const bool estimate = tab.has_column("state");
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const int j = time_index(s.times, tab.number(r, "t"));
    const int k = std::stoi(tab.rows[r][tab.column("k")]);
    if (estimate) {
      const char st = tab.rows[r][tab.column("state")].at(0);
      s.cells[{j, k, st}] = {tab.number(r, "mean"), tab.number(r, "stderr")};
    } else {
      for (const char st : {'S', 'I', 'R'}) s.cells[{j, k, st}] = {tab.number(r, std::string(1, st)), 0.0};
    }
  }
  return s;
}

Series closed_form_series(const Scenario& s, const std::string& id, const std::vector<double>& times) {
  Series out;
  out.label = "closed_form:" + id;
  out.times = times;
  const auto& g = s.geometry();
  auto steady_rate = [&](const Descriptor& d, int k) {
    if (!d.steady()) throw ValidationError("closed form '" + id + "' needs time-independent rates", {}, {});
    return d.spatial(k, g.x(k));
  };
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    for (int k = s.lattice.window_first; k <= s.lattice.window_last; ++k) {
      const int jj = static_cast<int>(j);
      const auto init = s.initial(k);
      if (id == "homogeneous_bass") {
        const double S0 = init.S;
        out.cells[{jj, k, 'S'}] = {closed::homogeneous_bass(S0, s.params.p, s.params.q_left, t), 0.0};
      } else if (id == "homogeneous_sir_bass") {
        const auto v = closed::homogeneous_sir_bass(init.S, init.R, steady_rate(s.params.p, k),
                                                    steady_rate(s.params.q_left, k), steady_rate(s.params.r, k), t);
        out.cells[{jj, k, 'S'}] = {v.S, 0.0};
        out.cells[{jj, k, 'R'}] = {v.R, 0.0};
        out.cells[{jj, k, 'I'}] = {1.0 - v.S - v.R, 0.0};
      } else if (id == "patient_zero_bass" || id == "patient_zero_sir" || id == "patient_zero_two_sided_bass") {
        if (k == 0) continue;
        const double p = steady_rate(s.params.p, k), q = steady_rate(s.params.q_left, k);
        double v = 0.0;
        if (id == "patient_zero_bass")
          v = closed::patient_zero_bass(p, q, k, t);
        else if (id == "patient_zero_sir")
          v = closed::patient_zero_sir(q, steady_rate(s.params.r, k), k, t);
        else
          v = closed::patient_zero_two_sided_bass(p, q, steady_rate(s.params.q_right, k), k, t);
        out.cells[{jj, k, 'S'}] = {v, 0.0};
      } else if (id == "point_source_bass" || id == "point_source_sir") {
        const Descriptor p0{ConstantSpace{s.params.p.spatial(0, g.x(0))}, s.params.p.time};
        const double q = steady_rate(s.params.q_left, std::max(k, 1));
        const double v = id == "point_source_bass" ? closed::point_source_bass(p0, q, k, t)
                                                   : closed::point_source_sir(p0, q, steady_rate(s.params.r, k), k, t);
        out.cells[{jj, k, 'S'}] = {v, 0.0};
      } else {
        throw UnknownFormula("unknown closed form for compare: '" + id + "'");
      }
    }
  }
  return out;
}

Series source_series(const json& src, const json& cfg, const Options& o, const std::vector<double>& times) {
  const auto method = src.at("method").get<std::string>();
  if (method == "csv") {
    const auto path = src.at("path").get<std::string>();
    return from_table(csv::read_file(path), "csv:" + path);
  }
  const Scenario s = scenario_from_json(cfg.at("scenario"));
  if (method == "monte_carlo") {
    auto sc = simulation_settings(cfg, o);
    if (src.contains("simulation")) {
      sc = simulation_from_json(src["simulation"]);
      if (o.seed) sc.seed = *o.seed;
      if (o.replications) sc.replications = *o.replications;
      if (o.dt) sc.dt = *o.dt;
    }
    auto tab = csv::estimate_table(estimate_marginals(s, sc, times));
    auto out = from_table(tab, "monte_carlo");
    return out;
  }
  if (method == "exact") {
    auto sc = solver_settings(cfg);
    sc.output_times = times;
    return from_table(csv::solution_table(solve(s, sc)), "exact");
  }
  if (method == "closed_form") return closed_form_series(s, src.at("formula").get<std::string>(), times);
  throw ConfigError("unknown compare method '" + method + "'");
}

// Linear interpolation of series b onto time t for a fixed (k, state).
std::optional<std::pair<double, double>> sample(const Series& s, int k, char st, double t) {
  int lo = -1, hi = -1;
  for (std::size_t j = 0; j < s.times.size(); ++j) {
    if (!s.cells.count({static_cast<int>(j), k, st})) continue;
    if (s.times[j] <= t + 1e-12 && (lo < 0 || s.times[j] > s.times[static_cast<std::size_t>(lo)]))
      lo = static_cast<int>(j);
    if (s.times[j] >= t - 1e-12 && (hi < 0 || s.times[j] < s.times[static_cast<std::size_t>(hi)]))
      hi = static_cast<int>(j);
  }
  if (lo < 0 || hi < 0) return std::nullopt;
  const auto a = s.cells.at({lo, k, st}), b = s.cells.at({hi, k, st});
  const double ta = s.times[static_cast<std::size_t>(lo)], tb = s.times[static_cast<std::size_t>(hi)];
  if (tb - ta < 1e-12) return a;
  const double w = (t - ta) / (tb - ta);
  return std::make_pair((1 - w) * a.first + w * b.first, (1 - w) * a.second + w * b.second);
}

int cmd_compare(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const json cfg = load_config(o);
  detail::reject_unknown(cfg, {"scenario", "simulation", "solver", "compare"}, "compare config");
  const json& cmp = cfg.at("compare");
  detail::reject_unknown(cmp, {"a", "b", "times", "states", "tolerance"}, "compare");
  std::vector<double> times;
  if (cmp.contains("times"))
    times = cmp["times"].get<std::vector<double>>();
  else if (cfg.contains("scenario"))
    times = make_time_grid(cfg["scenario"].at("horizon").get<double>(),
                           detail::field_or(cfg["scenario"], "grid_step", cfg["scenario"]["horizon"].get<double>()));
  std::set<char> states{'S', 'I', 'R'};
  if (cmp.contains("states")) {
    states.clear();
    for (const auto& st : cmp["states"]) states.insert(st.get<std::string>().at(0));
  }
  std::string tol_kind = "stderr";
  double tol = 4.0;
  if (cmp.contains("tolerance")) {
    detail::reject_unknown(cmp["tolerance"], {"kind", "value"}, "compare.tolerance");
    tol_kind = detail::field_or<std::string>(cmp["tolerance"], "kind", tol_kind);
    tol = detail::field_or(cmp["tolerance"], "value", tol);
    if (tol_kind != "stderr" && tol_kind != "abs") throw ConfigError("tolerance.kind must be 'stderr' or 'abs'");
  }
  if (o.tolerance) tol = *o.tolerance;

  const Series A = source_series(cmp.at("a"), cfg, o, times);
  const Series B = source_series(cmp.at("b"), cfg, o, times);
  // resample onto the coarser of the two time grids
  const bool same = A.times.size() == B.times.size() &&
                    std::equal(A.times.begin(), A.times.end(), B.times.begin(),
                               [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(x)); });
  const Series& grid = A.times.size() <= B.times.size() ? A : B;
  const Series& other = &grid == &A ? B : A;

  csv::Table rep;
  rep.meta = {{"schema", "compare"},
              {"a", A.label},
              {"b", B.label},
              {"tolerance", tol_kind + " " + csv::num(tol)}};
  if (!same) rep.meta.emplace_back("resampled", other.label + " interpolated onto the time grid of " + grid.label);
  rep.columns = {"t", "k", "state", "a", "b", "diff", "stderr", "z"};
  double max_abs = 0.0, max_z = 0.0;
  bool pass = true;
  long compared = 0;
  for (const auto& [key, gv] : grid.cells) {
    const auto [j, k, st] = key;
    if (!states.count(st)) continue;
    const double t = grid.times[static_cast<std::size_t>(j)];
    const auto ov = sample(other, k, st, t);
    if (!ov) continue;
    const auto av = &grid == &A ? gv : *ov;
    const auto bv = &grid == &A ? *ov : gv;
    const double diff = av.first - bv.first;
    const double se = std::sqrt(av.second * av.second + bv.second * bv.second);
    const double z = se > 0.0 ? std::abs(diff) / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    max_abs = std::max(max_abs, std::abs(diff));
    // a zero stderr estimate (frequency 0 or 1) only fails when the difference is visible
    const bool ok = tol_kind == "abs" ? std::abs(diff) <= tol : (std::abs(diff) <= tol * se || std::abs(diff) <= 1e-12);
    if (se > 0.0) max_z = std::max(max_z, z);
    pass = pass && ok;
    ++compared;
    rep.rows.push_back({csv::num(t), std::to_string(k), std::string(1, st), csv::num(av.first), csv::num(bv.first),
                        csv::num(diff), csv::num(se), csv::num(z)});
  }
  if (compared == 0) throw ValidationError("compare found no common (t, k, state) cells", {}, {});
  prepare_out(o.out);
  csv::write_file((fs::path(o.out) / "compare.csv").string(), rep);
  json summary{{"a", A.label},          {"b", B.label},     {"cells", compared},
               {"max_abs_diff", max_abs}, {"max_z", max_z}, {"tolerance_kind", tol_kind},
               {"tolerance", tol},        {"pass", pass},   {"resampled", !same}};
  write_json(fs::path(o.out) / "compare.json", summary);
  std::cout << summary.dump(2) << "\n";
  std::optional<std::uint64_t> seed;
  if (cfg.contains("simulation")) seed = simulation_settings(cfg, o).seed;
  write_manifest(o, "compare", seed, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return pass ? kOk : kTolerance;
}

// ---- converge ------------------------------------------------------------------

std::string dx_tag(double dx) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", dx);
  return buf;
}

int cmd_converge(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const json cfg = load_config(o);
  detail::reject_unknown(cfg, {"continuum", "dx_list", "t_snapshot", "reference_dx", "solver_h", "require_monotone"},
                         "converge config");
  const auto cs = continuum_from_json(cfg.at("continuum"));
  std::vector<double> dx = o.dx_list.empty() ? cfg.at("dx_list").get<std::vector<double>>() : o.dx_list;
  const double ts = detail::field_or(cfg, "t_snapshot", cs.horizon);
  ConvergenceConfig cc;
  cc.reference_dx = detail::field_or(cfg, "reference_dx", cc.reference_dx);
  cc.solver_h = detail::field_or(cfg, "solver_h", cc.solver_h);
  const auto res = convergence_study(cs, dx, ts, cc);
  prepare_out(o.out);
  csv::write_file((fs::path(o.out) / "error.csv").string(), csv::error_table(res.rows));
  for (const auto& lat : res.lattice)
    csv::write_file((fs::path(o.out) / ("lattice_dx" + dx_tag(lat.dx) + ".csv")).string(), csv::field_table(lat));
  csv::write_file((fs::path(o.out) / "reference.csv").string(), csv::field_table(res.reference));
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  bool pass = res.monotone || !detail::field_or(cfg, "require_monotone", false);
  if (o.tolerance) pass = pass && res.rows.back().sup_error <= *o.tolerance;
  json summary{{"monotone", res.monotone}, {"observed_order", res.observed_order}, {"warnings", res.warnings},
               {"pass", pass}};
  write_json(fs::path(o.out) / "converge.json", summary);
  csv::write(std::cout, csv::error_table(res.rows));
  write_manifest(o, "converge", std::nullopt,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return pass ? kOk : kTolerance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic SIR-Bass epidemics on 1D lattices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;
  for (int i = 0; i < argc; ++i) o.argv.emplace_back(argv[i]);

  auto common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "scenario / run config (JSON)");
    c->add_option("--out", o.out, "output directory")->capture_default_str();
  };
  auto* sim = app.add_subcommand("simulate", "Monte Carlo marginal estimates");
  common(sim);
  sim->add_option("--seed", o.seed, "RNG seed");
  sim->add_option("--replications", o.replications, "number of replications M");
  sim->add_option("--dt", o.dt, "discrete time step");
  auto* sol = app.add_subcommand("solve", "exact marginals from the lattice ODE system");
  common(sol);
  auto* frm = app.add_subcommand("formula", "evaluate a closed-form expression");
  frm->add_option("--id", o.formula_id, "formula id")->required();
  frm->add_option("--param", o.params, "name=value (repeatable)");
  frm->add_option("--k", o.ks, "node indices")->delimiter(',');
  frm->add_option("--t", o.ts, "times")->delimiter(',');
  frm->add_option("--out", o.out, "output directory")->capture_default_str();
  auto* cmp = app.add_subcommand("compare", "compare two methods on a shared grid");
  common(cmp);
  cmp->add_option("--seed", o.seed, "RNG seed for Monte Carlo sources");
  cmp->add_option("--replications", o.replications, "replications for Monte Carlo sources");
  cmp->add_option("--dt", o.dt, "discrete time step for Monte Carlo sources");
  cmp->add_option("--tolerance", o.tolerance, "override the config tolerance value");
  auto* cnv = app.add_subcommand("converge", "lattice-to-continuum error table");
  common(cnv);
  cnv->add_option("--dx-list", o.dx_list, "comma separated lattice spacings")->delimiter(',');
  cnv->add_option("--tolerance", o.tolerance, "fail when the finest error exceeds this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*sol) return cmd_solve(o);
    if (*frm) return cmd_formula(o);
    if (*cmp) return cmd_compare(o);
    if (*cnv) return cmd_converge(o);
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}
