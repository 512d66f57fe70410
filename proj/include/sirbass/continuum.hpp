#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "closed_forms.hpp"
#include "exact.hpp"
#include "model.hpp"
#include "ode.hpp"

namespace sirbass {

enum class Rescaling {
  local,      // rates and probabilities sampled at x = k dx; limit is a pointwise ODE
  transport,  // q = q~/dx, p = p~ dx, r = r~, I0 = I~0 dx, R0 = R~0 dx; limit is a transport PDE
};

// Fields on [x_lo, x_hi]. Spatial parts are evaluated in x only (no tables).
struct ContinuumScenario {
  Rescaling rescaling = Rescaling::local;
  double x_lo = 0.0, x_hi = 1.0;
  double horizon = 1.0;
  Descriptor p, q, r;
  SpatialPart S0 = ConstantSpace{1.0};  // local: [S0](x); transport: unused (S0 = 1)
  SpatialPart I0 = ConstantSpace{0.0};  // transport: density I~0(x); local: unused
  SpatialPart R0 = ConstantSpace{0.0};  // local: [R0](x); transport: density R~0(x)
};

// S(t, x) on a rectangular grid.
struct ContinuumField {
  std::vector<double> times;
  std::vector<double> x;
  std::vector<std::vector<double>> S;  // [time][x]
  double dx = 0.0, dt = 0.0;
  std::string scheme;
};

namespace detail {

inline double field(const SpatialPart& s, double x) {
  if (std::holds_alternative<TableSpace>(s)) throw DomainError("continuum fields must be constant or affine in x");
  return space_value(s, 0, x);
}

inline double field(const Descriptor& d, double x, double t) { return field(d.space, x) * time_value(d.time, t); }

inline SpatialPart scaled(const SpatialPart& s, double f) {
  if (auto c = std::get_if<ConstantSpace>(&s)) return ConstantSpace{c->value * f};
  if (auto a = std::get_if<AffineSpace>(&s)) return AffineSpace{a->intercept * f, a->slope * f, a->clamp};
  auto t = std::get<TableSpace>(s);
  for (auto& v : t.values) v *= f;
  return t;
}

// Restricts an affine part to [lo, hi] by constant continuation outside.
inline SpatialPart clamped(const SpatialPart& s, double lo, double hi) {
  if (auto a = std::get_if<AffineSpace>(&s)) {
    AffineSpace out = *a;
    const double l = a->clamp ? std::max(lo, a->clamp->first) : lo;
    const double h = a->clamp ? std::min(hi, a->clamp->second) : hi;
    out.clamp = std::make_pair(l, h);
    return out;
  }
  return s;
}

}  // namespace detail

// Exact integral of a constant or affine (possibly clamped) spatial part over [a, b].
inline double space_integral(const SpatialPart& s, double a, double b) {
  if (b <= a) return 0.0;
  if (auto c = std::get_if<ConstantSpace>(&s)) return c->value * (b - a);
  const auto* af = std::get_if<AffineSpace>(&s);
  if (!af) throw DomainError("space_integral needs a constant or affine descriptor");
  auto lin = [&](double u, double v) { return af->intercept * (v - u) + 0.5 * af->slope * (v * v - u * u); };
  if (!af->clamp) return lin(a, b);
  const double lo = af->clamp->first, hi = af->clamp->second;
  double acc = 0.0;
  if (a < lo) acc += (af->intercept + af->slope * lo) * (std::min(b, lo) - a);
  if (b > hi) acc += (af->intercept + af->slope * hi) * (b - std::max(a, hi));
  const double u = std::max(a, lo), v = std::min(b, hi);
  if (v > u) acc += lin(u, v);
  return acc;
}

// ---- limit ODE -------------------------------------------------------------

enum class LimitOdeMethod { automatic, explicit_formula, numeric };

struct LimitOdeConfig {
  LimitOdeMethod method = LimitOdeMethod::automatic;
  double h = 1e-3;  // numeric method only
};

namespace detail {

// Pointwise limit ODE at one x:
//   S' = -(p + q (1 - E S0) + r) S + q E S0 (R0 + r(0)/q(0)) + q m,   m' = -p m + (r/q)' S
inline std::vector<double> limit_ode_numeric(const ContinuumScenario& cs, double x, const std::vector<double>& times,
                                             double h) {
  const double S0 = field(cs.S0, x), R0 = field(cs.R0, x);
  const double ps = field(cs.p.space, x), qs = field(cs.q.space, x), rs = field(cs.r.space, x);
  const auto &pt = cs.p.time, &qt = cs.q.time, &rt = cs.r.time;
  if (rs > 0.0 && (qs <= 0.0 || detail::first_zero(qt, cs.horizon) >= 0.0))
    throw ValidationError("limit ODE needs q > 0 where r > 0", {}, {});
  auto rho = [&](double t) { return rs == 0.0 ? 0.0 : rs * time_value(rt, t) / (qs * time_value(qt, t)); };
  auto rho_dot = [&](double t) {
    if (rs == 0.0) return 0.0;
    const double fq = time_value(qt, t), fr = time_value(rt, t);
    return rs / qs * (time_derivative(rt, t) * fq - fr * time_derivative(qt, t)) / (fq * fq);
  };
  const double rho0 = rho(0.0);
  auto rhs = [&](double t, const std::vector<double>& y, std::vector<double>& d) {
    const double p = ps * time_value(pt, t), q = qs * time_value(qt, t), r = rs * time_value(rt, t);
    const double E = std::exp(-ps * time_integral(pt, t));
    d[0] = -(p + q * (1.0 - E * S0) + r) * y[0] + q * E * S0 * (R0 + rho0) + q * y[1];
    d[1] = -p * y[1] + rho_dot(t) * y[0];
  };
  std::vector<double> brk;
  for (const Descriptor* dd : {&cs.p, &cs.q, &cs.r})
    for (double b : time_breaks(dd->time, cs.horizon)) brk.push_back(b);
  std::sort(brk.begin(), brk.end());
  std::vector<double> y{S0, 0.0}, out(times.size());
  integrate_on_grid(
      rhs, y, times, brk, h, [&](std::size_t j, const std::vector<double>& Y) { out[j] = Y[0]; },
      [&](double b, std::vector<double>& Y) { Y[1] += (rho(b) - rho(std::nextafter(b, 0.0))) * Y[0]; });
  return out;
}

}  // namespace detail

// Pointwise solve of the local-rescaling limit at each x; uses the explicit
// homogeneous solution when the rates do not depend on time.
inline ContinuumField solve_limit_ode(const ContinuumScenario& cs, const std::vector<double>& xs,
                                      const std::vector<double>& times, const LimitOdeConfig& cfg = {}) {
  const bool steady = cs.p.steady() && cs.q.steady() && cs.r.steady();
  const bool use_formula = cfg.method == LimitOdeMethod::explicit_formula ||
                           (cfg.method == LimitOdeMethod::automatic && steady);
  if (use_formula && !steady) throw ValidationError("explicit limit formula needs time-independent rates", {}, {});
  ContinuumField f;
  f.times = times;
  f.x = xs;
  f.scheme = use_formula ? "limit_ode_explicit" : "limit_ode_rk4";
  f.dt = use_formula ? 0.0 : cfg.h;
  f.dx = xs.size() > 1 ? xs[1] - xs[0] : 0.0;
  f.S.assign(times.size(), std::vector<double>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    if (use_formula) {
      const double S0 = detail::field(cs.S0, x), R0 = detail::field(cs.R0, x);
      const double p = detail::field(cs.p.space, x), q = detail::field(cs.q.space, x), r = detail::field(cs.r.space, x);
      for (std::size_t j = 0; j < times.size(); ++j) f.S[j][i] = closed::homogeneous_sir_bass(S0, R0, p, q, r, times[j]).S;
    } else {
      const auto col = detail::limit_ode_numeric(cs, x, times, cfg.h);
      for (std::size_t j = 0; j < times.size(); ++j) f.S[j][i] = col[j];
    }
  }
  return f;
}

// ---- transport PDE -----------------------------------------------------------

struct PdeConfig {
  double dt = 0.0;   // 0 selects 0.9 of the monotonicity bound
  double cfl = 0.9;  // safety factor for the automatic dt
};

// Largest dt keeping the explicit upwind update monotone.
inline double pde_stable_dt(const ContinuumScenario& cs, double dx) {
  double worst = 0.0;
  const int J = static_cast<int>(std::llround((cs.x_hi - cs.x_lo) / dx));
  for (int j = 0; j <= J; ++j) {
    const double x = cs.x_lo + j * dx;
    const double q = std::abs(detail::field(cs.q.space, x)) * time_sup(cs.q.time, cs.horizon);
    const double p_int = std::abs(detail::field(cs.p.space, x)) * time_integral(cs.p.time, cs.horizon);
    const double decay = q * (detail::field(cs.I0, x) + detail::field(cs.R0, x) + std::max(0.0, p_int)) +
                         std::abs(detail::field(cs.r.space, x)) * time_sup(cs.r.time, cs.horizon);
    worst = std::max(worst, q / dx + decay);
  }
  return worst > 0.0 ? 1.0 / worst : cs.horizon;
}

// First-order left-upwind explicit Euler for
//   S_t + q~ S_x + [q~ (I~0 + R~0 + int_0^t p~) + r~] S = q~ R~0 + r~,  S(0, x) = 1,
// with inflow S = 1 at x_lo.
inline ContinuumField solve_limit_pde(const ContinuumScenario& cs, double dx, const std::vector<double>& times,
                                      const PdeConfig& cfg = {}) {
  if (!(dx > 0.0)) throw ValidationError("dx must be positive", {}, {});
  const int J = static_cast<int>(std::llround((cs.x_hi - cs.x_lo) / dx));
  const double bound = pde_stable_dt(cs, dx);
  double dt = cfg.dt > 0.0 ? cfg.dt : cfg.cfl * bound;
  if (dt > bound * (1.0 + 1e-12)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "CFL violation: dt=%g exceeds the stable bound %g", dt, bound);
    throw ValidationError(buf, {}, {});
  }
  std::vector<double> x(static_cast<std::size_t>(J) + 1), q(x.size()), p(x.size()), r(x.size()), dens(x.size()),
      src(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = cs.x_lo + static_cast<double>(j) * dx;
    q[j] = detail::field(cs.q.space, x[j]);
    p[j] = detail::field(cs.p.space, x[j]);
    r[j] = detail::field(cs.r.space, x[j]);
    dens[j] = detail::field(cs.I0, x[j]) + detail::field(cs.R0, x[j]);
    src[j] = detail::field(cs.R0, x[j]);
    if (q[j] < 0.0) throw ValidationError("q~ must be nonnegative", {}, {});
  }
  ContinuumField f;
  f.times = times;
  f.x = x;
  f.dx = dx;
  f.scheme = "upwind_euler";
  f.S.assign(times.size(), std::vector<double>(x.size()));
  std::vector<double> S(x.size(), 1.0), next(x.size());
  double t = 0.0;
  std::size_t out = 0;
  auto record = [&] {
    while (out < times.size() && times[out] <= t + 1e-12) f.S[out++] = S;
  };
  record();
  const double T = times.empty() ? 0.0 : times.back();
  double used_dt = dt;
  while (out < times.size()) {
    const double target = times[out];
    const auto n = static_cast<long>(std::ceil((target - t) / dt - 1e-9));
    const double h = (target - t) / static_cast<double>(std::max(1L, n));
    used_dt = std::min(used_dt, h);
    for (long s = 0; s < std::max(1L, n); ++s) {
      const double fq = time_value(cs.q.time, t), fr = time_value(cs.r.time, t), ip = time_integral(cs.p.time, t);
      next[0] = 1.0;
      for (std::size_t j = 1; j < x.size(); ++j) {
        const double qj = q[j] * fq, rj = r[j] * fr;
        const double decay = qj * (dens[j] + p[j] * ip) + rj;
        next[j] = S[j] - h * qj * (S[j] - S[j - 1]) / dx - h * decay * S[j] + h * (qj * src[j] + rj);
      }
      S.swap(next);
      t += h;
    }
    t = target;
    record();
  }
  (void)T;
  f.dt = used_dt;
  return f;
}

// Characteristics solution of the transport limit without recovery or source
// and with constant q~: S = exp(-int_{max(x - q~ t, x_lo)}^x I~0).
inline double pde_characteristics_si(double q, const SpatialPart& I0, double t, double x,
                                     double x_lo = -std::numeric_limits<double>::infinity()) {
  if (!(q >= 0.0)) throw DomainError("characteristics need q~ >= 0");
  return std::exp(-space_integral(I0, std::max(x - q * t, x_lo), x));
}

// Sup distance at time t between the upwind solution and the characteristics
// solution, over grid points whose characteristic foot x - q~ t lies at least
// `margin` inside the domain (the inflow corner is only Lipschitz).
inline double characteristics_error(const ContinuumScenario& si, double dx, double t, double margin = 1.0) {
  const auto* qc = std::get_if<ConstantSpace>(&si.q.space);
  if (!qc || !si.q.steady() || !si.p.is_zero() || !si.r.is_zero())
    throw ValidationError("characteristics solution needs constant q~ and p~ = r~ = 0", {}, {});
  const auto* rc = std::get_if<ConstantSpace>(&si.R0);
  if (!rc || rc->value != 0.0) throw ValidationError("characteristics solution needs R~0 = 0", {}, {});
  const auto f = solve_limit_pde(si, dx, {0.0, t});
  const double foot = si.x_lo + qc->value * t + margin;
  double err = 0.0;
  for (std::size_t i = 0; i < f.x.size(); ++i)
    if (f.x[i] >= foot - 1e-12)
      err = std::max(err, std::abs(f.S[1][i] - pde_characteristics_si(qc->value, si.I0, t, f.x[i], si.x_lo)));
  return err;
}

// ---- lattice families --------------------------------------------------------

struct LatticeFamilyMember {
  Scenario scenario;
  std::vector<std::string> warnings;
};

// Lattice with spacing dx whose window k = 0..floor((x_hi - x_lo)/dx) covers [x_lo, x_hi].
inline LatticeFamilyMember lattice_for(const ContinuumScenario& cs, double dx) {
  LatticeFamilyMember m;
  Scenario& s = m.scenario;
  s.horizon = cs.horizon;
  s.grid_step = cs.horizon;
  s.lattice.sidedness = Sidedness::one_sided;
  s.lattice.geometry = {cs.x_lo, dx};
  s.lattice.window_first = 0;
  s.lattice.window_last = static_cast<int>(std::floor((cs.x_hi - cs.x_lo) / dx + 1e-9));
  const double lo = cs.x_lo, hi = cs.x_hi;
  if (cs.rescaling == Rescaling::local) {
    // whole line, fields continued as constants outside [x_lo, x_hi]
    s.lattice.topology = Topology::infinite_line;
    s.params.p = {detail::clamped(cs.p.space, lo, hi), cs.p.time};
    s.params.q_left = {detail::clamped(cs.q.space, lo, hi), cs.q.time};
    s.params.r = {detail::clamped(cs.r.space, lo, hi), cs.r.time};
    s.init.susceptible = detail::clamped(cs.S0, lo, hi);
    s.init.recovered = detail::clamped(cs.R0, lo, hi);
    const auto S0 = s.init.susceptible, R0 = s.init.recovered;
    // infected share fills the remainder: I0 = 1 - S0 - R0
    auto rem = [&]() -> SpatialPart {
      const auto* a = std::get_if<AffineSpace>(&S0);
      const auto* b = std::get_if<AffineSpace>(&R0);
      const auto* ca = std::get_if<ConstantSpace>(&S0);
      const auto* cb = std::get_if<ConstantSpace>(&R0);
      const double ia = a ? a->intercept : ca->value, sa = a ? a->slope : 0.0;
      const double ib = b ? b->intercept : cb->value, sb = b ? b->slope : 0.0;
      return AffineSpace{1.0 - ia - ib, -sa - sb, std::make_pair(lo, hi)};
    };
    s.init.infected = rem();
  } else {
    // semi-infinite line starting at x_lo, matching the inflow boundary of the PDE
    s.lattice.topology = Topology::semi_infinite_line;
    s.params.p = {detail::scaled(cs.p.space, dx), cs.p.time};
    s.params.q_left = {detail::scaled(cs.q.space, 1.0 / dx), cs.q.time};
    s.params.r = cs.r;
    TableSpace S0{0, {}}, I0{0, {}}, R0{0, {}};
    bool clamped = false;
    for (int k = 0; k <= s.lattice.window_last; ++k) {
      const double x = s.lattice.geometry.x(k);
      double i = detail::field(cs.I0, x) * dx, rr = detail::field(cs.R0, x) * dx;
      const double i0 = i, r0 = rr;
      i = std::clamp(i, 0.0, 1.0);
      rr = std::clamp(rr, 0.0, 1.0 - i);
      if (i != i0 || rr != r0) clamped = true;
      I0.values.push_back(i);
      R0.values.push_back(rr);
      S0.values.push_back(1.0 - i - rr);
    }
    if (clamped) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "initial densities clamped to [0,1] at dx=%g", dx);
      m.warnings.emplace_back(buf);
    }
    s.init.susceptible = S0;
    s.init.infected = I0;
    s.init.recovered = R0;
  }
  return m;
}

struct ErrorRow {
  double dx = 0.0;
  double sup_error = 0.0;
  double t_snapshot = 0.0;
};

struct ConvergenceResult {
  std::vector<ErrorRow> rows;
  std::vector<ContinuumField> lattice;  // one snapshot per dx, x = x_lo + k dx
  ContinuumField reference;             // limit solution on the finest lattice points (or PDE grid)
  std::vector<std::string> warnings;
  bool monotone = true;                 // errors strictly decrease along the dx list
  double observed_order = 0.0;          // least-squares slope of log error vs log dx
};

struct ConvergenceConfig {
  double solver_h = 0.0;      // exact lattice solver step; 0 picks 0.02 / max rate
  double reference_dx = 5e-4;  // transport rescaling: PDE grid for the reference solution
};

inline double observed_order(const std::vector<ErrorRow>& rows) {
  if (rows.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    const double lx = std::log(r.dx), ly = std::log(r.sup_error);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace detail {

inline double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - xs.begin());
  const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return (1.0 - w) * ys[j - 1] + w * ys[j];
}

}  // namespace detail

// Solves the exact lattice system for each dx and reports its sup-norm
// distance at t_snapshot from the continuum limit of the chosen rescaling.
inline ConvergenceResult convergence_study(const ContinuumScenario& cs, const std::vector<double>& dx_list,
                                           double t_snapshot, const ConvergenceConfig& cfg = {}) {
  if (dx_list.empty()) throw ValidationError("empty dx list", {}, {});
  if (!(t_snapshot > 0.0 && t_snapshot <= cs.horizon)) throw ValidationError("snapshot time outside (0, T]", {}, {});
  ConvergenceResult res;
  const std::vector<double> times{0.0, t_snapshot};
  if (cs.rescaling == Rescaling::transport) {
    res.reference = solve_limit_pde(cs, cfg.reference_dx, times);
  }
  for (double dx : dx_list) {
    auto member = lattice_for(cs, dx);
    for (auto& w : member.warnings) res.warnings.push_back(w);
    Scenario& s = member.scenario;
    s.horizon = t_snapshot;
    s.grid_step = t_snapshot;
    SolverConfig sc;
    if (cfg.solver_h > 0.0) {
      sc.h = cfg.solver_h;
    } else {
      const double rate = detail::max_total_rate(s, compute_range(s));
      sc.h = std::min(1e-3, 0.02 / std::max(rate, 1e-300));
    }
    const auto sol = solve_sir_bass_one_sided(s, sc);
    ContinuumField lat;
    lat.times = {t_snapshot};
    lat.dx = dx;
    lat.dt = sol.h;
    lat.scheme = "lattice_exact";
    lat.S.resize(1);
    for (int k = s.lattice.window_first; k <= s.lattice.window_last; ++k) {
      lat.x.push_back(s.lattice.geometry.x(k));
      lat.S[0].push_back(sol.marginals.s(k, 1));
    }
    std::vector<double> ref(lat.x.size());
    if (cs.rescaling == Rescaling::local) {
      const auto lim = solve_limit_ode(cs, lat.x, {t_snapshot});
      ref = lim.S[0];
      if (res.reference.x.empty() || lim.x.size() > res.reference.x.size()) res.reference = lim;
    } else {
      for (std::size_t i = 0; i < lat.x.size(); ++i)
        ref[i] = detail::interpolate(res.reference.x, res.reference.S[1], lat.x[i]);
    }
    double err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(lat.S[0][i] - ref[i]));
    res.rows.push_back({dx, err, t_snapshot});
    res.lattice.push_back(std::move(lat));
  }
  for (std::size_t i = 1; i < res.rows.size(); ++i)
    if (!(res.rows[i].sup_error < res.rows[i - 1].sup_error)) res.monotone = false;
  res.observed_order = observed_order(res.rows);
  if (cs.rescaling == Rescaling::transport) {
    // keep only the snapshot row of the reference
    res.reference.times = {t_snapshot};
    res.reference.S = {res.reference.S[1]};
  } else {
    res.reference.times = {t_snapshot};
  }
  return res;
}

// Fields of the two reference convergence experiments.
inline ContinuumScenario local_benchmark() {
  ContinuumScenario cs;
  cs.rescaling = Rescaling::local;
  cs.x_lo = 0.0, cs.x_hi = 5.0, cs.horizon = 2.0;
  cs.p = Descriptor{AffineSpace{1.0, -1.0 / 5.0, {}}};
  cs.q = Descriptor{AffineSpace{5.0, 1.0, {}}};
  cs.r = Descriptor{AffineSpace{2.0, -2.0 / 5.0, {}}};
  cs.S0 = AffineSpace{0.2, -1.0 / 25.0, {}};
  cs.R0 = AffineSpace{0.2, 3.0 / 50.0, {}};
  return cs;
}

inline ContinuumScenario transport_benchmark() {
  ContinuumScenario cs;
  cs.rescaling = Rescaling::transport;
  cs.x_lo = 0.0, cs.x_hi = 10.0, cs.horizon = 2.0;
  cs.p = Descriptor{AffineSpace{0.1, 0.2 / 10.0, {}}};
  cs.q = Descriptor{AffineSpace{1.0, 1.0 / 10.0, {}}};
  cs.r = Descriptor{AffineSpace{0.3, 0.5 / 10.0, {}}};
  cs.I0 = AffineSpace{0.2, 0.5 / 10.0, {}};
  cs.R0 = AffineSpace{0.5, -0.3 / 10.0, {}};
  return cs;
}

}  // namespace sirbass
