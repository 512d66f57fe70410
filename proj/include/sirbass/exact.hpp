#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "model.hpp"
#include "ode.hpp"

namespace sirbass {

struct SolverConfig {
  double h = 0.0;                    // 0 selects 1e-3 * min(1, 1 / max rate)
  std::vector<double> output_times;  // empty selects the scenario grid
};

struct Solution {
  MarginalSeries marginals;  // window nodes only
  PairMarginalSeries pairs;  // ss always, sr for recovery solves
  NodeRange range;           // nodes actually integrated
  double h = 0.0;
};

namespace detail {

inline std::vector<double> merged_breaks(const Scenario& s) {
  std::vector<double> b;
  for (const Descriptor* d : {&s.params.p, &s.params.q_left, &s.params.q_right, &s.params.r})
    for (double x : time_breaks(d->time, s.horizon)) b.push_back(x);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

inline double max_total_rate(const Scenario& s, const NodeRange& range) {
  const auto& g = s.geometry();
  double m = 0.0;
  for (int k = range.first; k <= range.last; ++k) {
    const double x = g.x(k);
    double tot = s.params.p.sup(k, x, s.horizon) + s.params.q_left.sup(k, x, s.horizon) + s.params.r.sup(k, x, s.horizon);
    if (s.two_sided()) tot += s.params.q_right.sup(k, x, s.horizon);
    m = std::max(m, tot);
  }
  return m;
}

inline std::vector<double> output_grid(const Scenario& s, const SolverConfig& cfg) {
  if (cfg.output_times.empty()) return make_time_grid(s.horizon, s.grid_step);
  auto g = cfg.output_times;
  for (double t : g)
    if (!(t >= 0.0 && t <= s.horizon + 1e-12))
      throw ValidationError("output time outside [0, T]", {}, t);
  if (!std::is_sorted(g.begin(), g.end())) throw ValidationError("output times must be sorted", {}, {});
  return g;
}

inline MarginalSeries empty_series(const std::vector<double>& times, int first, int count) {
  MarginalSeries m;
  m.times = times;
  m.first_node = first;
  m.S.assign(static_cast<std::size_t>(count), std::vector<double>(times.size()));
  m.I = m.S;
  m.R = m.S;
  return m;
}

// A one-sided contagion chain: node i is infected from its upstream neighbour
// i - dir (dir = +1 for left-to-right). The head node has no upstream
// neighbour and only feels its source term.
struct Chain {
  int dir = 1;
  const TemporalPart* pt = nullptr;
  const TemporalPart* qt = nullptr;
  const TemporalPart* rt = nullptr;
  std::vector<double> p, q, r_up, S0, R0_up, rho0;
  std::vector<unsigned char> head;
  std::vector<unsigned char> decoupled;  // no contagion from upstream at all
  bool memory = false;  // r_up / q varies in time: carry the auxiliary integral

  double rho(std::size_t i, double t) const {
    if (r_up[i] == 0.0) return 0.0;
    return r_up[i] * time_value(*rt, t) / (q[i] * time_value(*qt, t));
  }
  double rho_dot(std::size_t i, double t) const {
    if (r_up[i] == 0.0) return 0.0;
    const double fq = time_value(*qt, t), fr = time_value(*rt, t);
    return r_up[i] / q[i] * (time_derivative(*rt, t) * fq - fr * time_derivative(*qt, t)) / (fq * fq);
  }
};

// First time in [0, T] at which a temporal factor vanishes, or -1.
inline double first_zero(const TemporalPart& tp, double horizon) {
  if (std::holds_alternative<Steady>(tp)) return -1.0;
  if (auto e = std::get_if<ExponentialTime>(&tp)) return e->amplitude == 0.0 ? 0.0 : -1.0;
  const auto& pw = std::get<PiecewiseTime>(tp);
  for (std::size_t j = 0; j < pw.values.size(); ++j) {
    const double start = j == 0 ? 0.0 : pw.breaks[j - 1];
    if (start > horizon) break;
    if (pw.values[j] == 0.0) return std::max(0.0, start);
  }
  return -1.0;
}

inline bool identically_zero(const TemporalPart& tp, double horizon) {
  if (auto e = std::get_if<ExponentialTime>(&tp)) return e->amplitude == 0.0;
  if (auto pw = std::get_if<PiecewiseTime>(&tp)) {
    for (std::size_t j = 0; j < pw->values.size(); ++j) {
      const double start = j == 0 ? 0.0 : pw->breaks[j - 1];
      if (start > horizon) break;
      if (pw->values[j] != 0.0) return false;
    }
    return true;
  }
  return false;
}

inline Chain make_chain(const Scenario& s, const NodeRange& range, int dir, const Descriptor& qd) {
  const auto& g = s.geometry();
  const std::size_t n = static_cast<std::size_t>(range.size());
  Chain c;
  c.dir = dir;
  c.pt = &s.params.p.time;
  c.qt = &qd.time;
  c.rt = &s.params.r.time;
  c.p.resize(n);
  c.q.resize(n);
  c.r_up.assign(n, 0.0);
  c.S0.resize(n);
  c.R0_up.assign(n, 0.0);
  c.rho0.assign(n, 0.0);
  c.head.assign(n, 0);
  c.decoupled.assign(n, 0);
  const bool r_dead = identically_zero(s.params.r.time, s.horizon);
  const bool q_dead = identically_zero(qd.time, s.horizon);
  const bool same_time = s.params.r.time == qd.time || (is_steady(s.params.r.time) && is_steady(qd.time));
  std::vector<Violation> bad;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = range.first + static_cast<int>(i);
    c.p[i] = s.params.p.spatial(k, g.x(k));
    c.q[i] = qd.spatial(k, g.x(k));
    c.S0[i] = s.initial(k).S;
    const int up = k - dir;
    c.head[i] = !range.contains(up);
    if (c.head[i]) continue;
    c.R0_up[i] = s.initial(up).R;
    if (q_dead || c.q[i] == 0.0) {
      c.decoupled[i] = 1;
      continue;
    }
    c.r_up[i] = r_dead ? 0.0 : s.params.r.spatial(up, g.x(up));
    if (c.r_up[i] == 0.0) continue;
    // The recovery/contagion ratio is only defined while q > 0.
    const double tz = first_zero(qd.time, s.horizon);
    if (tz >= 0.0) {
      bad.push_back({"q vanishes where recovery of the upstream node needs it", k, tz});
      continue;
    }
    c.rho0[i] = c.rho(i, 0.0);
    if (!same_time) c.memory = true;
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return c;
}

// ---- right-hand sides ----------------------------------------------------

// Chain susceptibility: S' = -(p+q+r_up) S + q E S0 (S_up + R0_up + rho(0)) + q m
// with m' = -p m + rho'(t) S. Layout: S at y[off], m at y[moff] when memory.
inline void chain_rhs(const Chain& c, double t, const double* S, const double* m, double* dS, double* dm) {
  const double fp = time_value(*c.pt, t), ip = time_integral(*c.pt, t);
  const double fq = time_value(*c.qt, t), fr = time_value(*c.rt, t);
  const std::size_t n = c.p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double p = c.p[i] * fp;
    if (c.head[i]) {
      dS[i] = -p * S[i];
      if (m) dm[i] = 0.0;
      continue;
    }
    const double q = c.q[i] * fq, r = c.r_up[i] * fr;
    const double E = std::exp(-c.p[i] * ip);
    const std::size_t up = c.dir > 0 ? i - 1 : i + 1;
    double v = -(p + q + r) * S[i] + q * E * c.S0[i] * (S[up] + c.R0_up[i] + c.rho0[i]);
    if (m) {
      v += q * m[i];
      dm[i] = -p * m[i] + c.rho_dot(i, t) * S[i];
    }
    dS[i] = v;
  }
}

// Jump of the auxiliary integral when rho jumps at a breakpoint.
inline void chain_jump(const Chain& c, double b, const double* S, double* m) {
  const double before = std::nextafter(b, 0.0);
  for (std::size_t i = 0; i < c.p.size(); ++i) {
    if (c.head[i] || c.r_up[i] == 0.0) continue;
    m[i] += (c.rho(i, b) - c.rho(i, before)) * S[i];
  }
}

// P(S_k and R_up) = E (rho(0) S0 + S0 R0_up) + m - rho(t) S.
inline double chain_pair_sr(const Chain& c, std::size_t i, double t, const double* S, const double* m) {
  if (c.head[i]) return 0.0;
  const double E = std::exp(-c.p[i] * time_integral(*c.pt, t));
  double v = E * c.S0[i] * (c.rho0[i] + c.R0_up[i]) - c.rho(i, t) * S[i];
  if (m) v += m[i];
  return v;
}

inline double chain_pair_ss(const Chain& c, std::size_t i, double t, const double* S) {
  if (c.head[i]) return S[i];
  const std::size_t up = c.dir > 0 ? i - 1 : i + 1;
  return std::exp(-c.p[i] * time_integral(*c.pt, t)) * c.S0[i] * S[up];
}

struct Prepared {
  NodeRange range;
  std::vector<double> times;
  std::vector<double> breaks;
  double h = 0.0;
  int out_first = 0;  // window in range-local indices
  int out_count = 0;
};

inline Prepared prepare(const Scenario& raw, const SolverConfig& cfg) {
  const Scenario& s = raw;
  validate_scenario(s);
  Prepared p;
  p.range = compute_range(s);
  p.times = output_grid(s, cfg);
  p.breaks = merged_breaks(s);
  const double rate = max_total_rate(s, p.range);
  p.h = cfg.h > 0.0 ? cfg.h : 1e-3 * std::min(1.0, rate > 0.0 ? 1.0 / rate : 1.0);
  p.out_first = s.lattice.window_first - p.range.first;
  p.out_count = s.lattice.window_last - s.lattice.window_first + 1;
  return p;
}

inline bool recovery_present(const Scenario& s, const NodeRange& range) {
  if (identically_zero(s.params.r.time, s.horizon)) {
    for (int k = range.first; k <= range.last; ++k)
      if (s.initial(k).R != 0.0) return true;
    return false;
  }
  const auto& g = s.geometry();
  for (int k = range.first; k <= range.last; ++k)
    if (s.params.r.spatial(k, g.x(k)) != 0.0 || s.initial(k).R != 0.0) return true;
  return false;
}

inline PairMarginalSeries empty_pairs(const std::vector<double>& times, int first, int count, bool with_sr) {
  PairMarginalSeries ps;
  ps.times = times;
  ps.first_node = first;
  ps.ss.assign(static_cast<std::size_t>(count), std::vector<double>(times.size()));
  if (with_sr) ps.sr = ps.ss;
  return ps;
}

}  // namespace detail

// One-sided Bass (no recovery): S_k' = -(p_k + q_k) S_k + q_k e^{-int p_k} S_k^0 S_{k-1}.
inline Solution solve_bass_one_sided(const Scenario& s, const SolverConfig& cfg = {}) {
  if (s.two_sided()) throw ValidationError("solve_bass_one_sided needs a one-sided lattice", {}, {});
  auto pr = detail::prepare(s, cfg);
  if (detail::recovery_present(s, pr.range))
    throw ValidationError("recovery present: use solve_sir_bass_one_sided", {}, {});
  const auto& g = s.geometry();
  const std::size_t n = static_cast<std::size_t>(pr.range.size());
  std::vector<double> p(n), q(n), S0(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = pr.range.first + static_cast<int>(i);
    p[i] = s.params.p.spatial(k, g.x(k));
    q[i] = s.params.q_left.spatial(k, g.x(k));
    S0[i] = y[i] = s.initial(k).S;
  }
  const TemporalPart& pt = s.params.p.time;
  const TemporalPart& qt = s.params.q_left.time;
  auto rhs = [&](double t, const std::vector<double>& S, std::vector<double>& dS) {
    const double fp = time_value(pt, t), ip = time_integral(pt, t), fq = time_value(qt, t);
    dS[0] = -(p[0] * fp) * S[0];
    for (std::size_t i = 1; i < n; ++i)
      dS[i] = -(p[i] * fp + q[i] * fq) * S[i] + q[i] * fq * std::exp(-p[i] * ip) * S0[i] * S[i - 1];
  };

  Solution sol;
  sol.range = pr.range;
  sol.h = pr.h;
  sol.marginals = detail::empty_series(pr.times, s.lattice.window_first, pr.out_count);
  const int pair_first = std::max(s.lattice.window_first, pr.range.first + 1);
  const int pair_count = s.lattice.window_last - pair_first + 1;
  sol.pairs = detail::empty_pairs(pr.times, pair_first, std::max(0, pair_count), false);
  integrate_on_grid(
      rhs, y, pr.times, pr.breaks, pr.h,
      [&](std::size_t j, const std::vector<double>& S) {
        const double ip = time_integral(pt, pr.times[j]);
        for (int o = 0; o < pr.out_count; ++o) {
          const std::size_t i = static_cast<std::size_t>(pr.out_first + o);
          sol.marginals.S[o][j] = S[i];
          sol.marginals.I[o][j] = 1.0 - S[i];
          sol.marginals.R[o][j] = 0.0;
        }
        for (int o = 0; o < pair_count; ++o) {
          const std::size_t i = static_cast<std::size_t>(pair_first - pr.range.first + o);
          sol.pairs.ss[o][j] = std::exp(-p[i] * ip) * S0[i] * S[i - 1];
        }
      },
      [](double, std::vector<double>&) {});
  return sol;
}

// One-sided SIR-Bass. Each node carries S_k, R_k and, when r_{k-1}/q_k varies in
// time, the auxiliary memory integral.
inline Solution solve_sir_bass_one_sided(const Scenario& s, const SolverConfig& cfg = {}) {
  if (s.two_sided()) throw ValidationError("solve_sir_bass_one_sided needs a one-sided lattice", {}, {});
  auto pr = detail::prepare(s, cfg);
  const auto chain = detail::make_chain(s, pr.range, +1, s.params.q_left);
  const auto& g = s.geometry();
  const std::size_t n = static_cast<std::size_t>(pr.range.size());
  const bool mem = chain.memory;
  std::vector<double> r(n);
  std::vector<double> y((mem ? 3 : 2) * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = pr.range.first + static_cast<int>(i);
    r[i] = s.params.r.spatial(k, g.x(k));
    const auto init = s.initial(k);
    y[i] = init.S;
    y[n + i] = init.R;
  }
  const TemporalPart& rt = s.params.r.time;
  auto rhs = [&](double t, const std::vector<double>& Y, std::vector<double>& dY) {
    const double* S = Y.data();
    const double* R = S + n;
    double* dS = dY.data();
    double* dR = dS + n;
    detail::chain_rhs(chain, t, S, mem ? S + 2 * n : nullptr, dS, mem ? dS + 2 * n : nullptr);
    const double fr = time_value(rt, t);
    for (std::size_t i = 0; i < n; ++i) dR[i] = r[i] * fr * (1.0 - S[i] - R[i]);
  };

  Solution sol;
  sol.range = pr.range;
  sol.h = pr.h;
  sol.marginals = detail::empty_series(pr.times, s.lattice.window_first, pr.out_count);
  const int pair_first = std::max(s.lattice.window_first, pr.range.first + 1);
  const int pair_count = std::max(0, s.lattice.window_last - pair_first + 1);
  sol.pairs = detail::empty_pairs(pr.times, pair_first, pair_count, true);
  integrate_on_grid(
      rhs, y, pr.times, pr.breaks, pr.h,
      [&](std::size_t j, const std::vector<double>& Y) {
        const double t = pr.times[j];
        const double* S = Y.data();
        const double* m = mem ? S + 2 * n : nullptr;
        for (int o = 0; o < pr.out_count; ++o) {
          const std::size_t i = static_cast<std::size_t>(pr.out_first + o);
          sol.marginals.S[o][j] = S[i];
          sol.marginals.R[o][j] = Y[n + i];
          sol.marginals.I[o][j] = 1.0 - S[i] - Y[n + i];
        }
        for (int o = 0; o < pair_count; ++o) {
          const std::size_t i = static_cast<std::size_t>(pair_first - pr.range.first + o);
          sol.pairs.ss[o][j] = detail::chain_pair_ss(chain, i, t, S);
          sol.pairs.sr[o][j] = chain.decoupled[i] ? S[i] * Y[n + i - 1] : detail::chain_pair_sr(chain, i, t, S, m);
        }
      },
      [&](double b, std::vector<double>& Y) {
        if (mem) detail::chain_jump(chain, b, Y.data(), Y.data() + 2 * n);
      });
  return sol;
}

// Two-sided lattice through the product of a left-to-right chain (q^L) and a
// right-to-left chain (q^R): S_k = S^L_k S^R_k / (S_k^0 e^{-int p_k}).
inline Solution solve_two_sided(const Scenario& s, const SolverConfig& cfg = {}) {
  if (!s.two_sided()) throw ValidationError("solve_two_sided needs a two-sided lattice", {}, {});
  auto pr = detail::prepare(s, cfg);
  const auto left = detail::make_chain(s, pr.range, +1, s.params.q_left);
  const auto right = detail::make_chain(s, pr.range, -1, s.params.q_right);
  const auto& g = s.geometry();
  const std::size_t n = static_cast<std::size_t>(pr.range.size());
  // layout: SL, SR, R, mL, mR
  std::vector<double> r(n), p(n), S0(n);
  std::vector<double> y(5 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = pr.range.first + static_cast<int>(i);
    r[i] = s.params.r.spatial(k, g.x(k));
    p[i] = s.params.p.spatial(k, g.x(k));
    const auto init = s.initial(k);
    S0[i] = init.S;
    y[i] = y[n + i] = init.S;
    y[2 * n + i] = init.R;
  }
  const TemporalPart& pt = s.params.p.time;
  const TemporalPart& rt = s.params.r.time;
  auto combine = [&](std::size_t i, double ip, const double* SL, const double* SR) {
    if (S0[i] <= 0.0) return 0.0;
    const double denom = S0[i] * std::exp(-p[i] * ip);
    return denom > 0.0 ? SL[i] * SR[i] / denom : 0.0;
  };
  auto rhs = [&](double t, const std::vector<double>& Y, std::vector<double>& dY) {
    const double* SL = Y.data();
    const double* SR = SL + n;
    const double* R = SL + 2 * n;
    double* d = dY.data();
    detail::chain_rhs(left, t, SL, left.memory ? SL + 3 * n : nullptr, d, left.memory ? d + 3 * n : nullptr);
    detail::chain_rhs(right, t, SR, right.memory ? SL + 4 * n : nullptr, d + n, right.memory ? d + 4 * n : nullptr);
    if (!left.memory) std::fill(d + 3 * n, d + 4 * n, 0.0);
    if (!right.memory) std::fill(d + 4 * n, d + 5 * n, 0.0);
    const double fr = time_value(rt, t), ip = time_integral(pt, t);
    for (std::size_t i = 0; i < n; ++i) d[2 * n + i] = r[i] * fr * (1.0 - combine(i, ip, SL, SR) - R[i]);
  };

  Solution sol;
  sol.range = pr.range;
  sol.h = pr.h;
  sol.marginals = detail::empty_series(pr.times, s.lattice.window_first, pr.out_count);
  const int pair_first = std::max(s.lattice.window_first, pr.range.first + 1);
  const int pair_count = std::max(0, s.lattice.window_last - pair_first + 1);
  sol.pairs = detail::empty_pairs(pr.times, pair_first, pair_count, false);
  integrate_on_grid(
      rhs, y, pr.times, pr.breaks, pr.h,
      [&](std::size_t j, const std::vector<double>& Y) {
        const double ip = time_integral(pt, pr.times[j]);
        const double* SL = Y.data();
        const double* SR = SL + n;
        for (int o = 0; o < pr.out_count; ++o) {
          const std::size_t i = static_cast<std::size_t>(pr.out_first + o);
          const double S = combine(i, ip, SL, SR);
          sol.marginals.S[o][j] = S;
          sol.marginals.R[o][j] = Y[2 * n + i];
          sol.marginals.I[o][j] = 1.0 - S - Y[2 * n + i];
        }
        // Both neighbours susceptible: k-1 spared from its left, k spared from its right.
        for (int o = 0; o < pair_count; ++o) {
          const std::size_t i = static_cast<std::size_t>(pair_first - pr.range.first + o);
          sol.pairs.ss[o][j] = SL[i - 1] * SR[i];
        }
      },
      [&](double b, std::vector<double>& Y) {
        if (left.memory) detail::chain_jump(left, b, Y.data(), Y.data() + 3 * n);
        if (right.memory) detail::chain_jump(right, b, Y.data() + n, Y.data() + 4 * n);
      });
  return sol;
}

// Two-sided Bass as a closed system in S_k and P_k = P(S_{k-1} and S_k):
//   S_k' = -(p_k + qL_k + qR_k) S_k + qL_k P_k + qR_k P_{k+1}
//   P_k' = -(p_{k-1} + p_k + qL_{k-1} + qR_k) P_k
//          + qL_{k-1} P_{k-1} P_k / S_{k-1} + qR_k P_k P_{k+1} / S_k
inline Solution solve_two_sided_closed(const Scenario& s, const SolverConfig& cfg = {}) {
  if (!s.two_sided()) throw ValidationError("solve_two_sided_closed needs a two-sided lattice", {}, {});
  auto pr = detail::prepare(s, cfg);
  if (detail::recovery_present(s, pr.range))
    throw ValidationError("solve_two_sided_closed does not support recovery", {}, {});
  const auto& g = s.geometry();
  const std::size_t n = static_cast<std::size_t>(pr.range.size());
  std::vector<double> p(n), qL(n), qR(n), y(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = pr.range.first + static_cast<int>(i);
    p[i] = s.params.p.spatial(k, g.x(k));
    qL[i] = i == 0 ? 0.0 : s.params.q_left.spatial(k, g.x(k));
    qR[i] = i + 1 == n ? 0.0 : s.params.q_right.spatial(k, g.x(k));
    y[i] = s.initial(k).S;
    if (i > 0) y[n + i] = y[i] * y[i - 1];
  }
  const TemporalPart& pt = s.params.p.time;
  const TemporalPart& qlt = s.params.q_left.time;
  const TemporalPart& qrt = s.params.q_right.time;
  auto ratio = [](double P, double S) { return S > 0.0 ? P / S : 0.0; };
  auto rhs = [&](double t, const std::vector<double>& Y, std::vector<double>& dY) {
    const double fp = time_value(pt, t), fl = time_value(qlt, t), fr = time_value(qrt, t);
    const double* S = Y.data();
    const double* P = S + n;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = qL[i] * fl, b = qR[i] * fr;
      double v = -(p[i] * fp + a + b) * S[i];
      if (i > 0) v += a * P[i];
      if (i + 1 < n) v += b * P[i + 1];
      dY[i] = v;
    }
    dY[n] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double aL = qL[i - 1] * fl, bR = qR[i] * fr;
      double v = -(p[i - 1] * fp + p[i] * fp + aL + bR) * P[i];
      if (i >= 2) v += aL * P[i] * ratio(P[i - 1], S[i - 1]);
      if (i + 1 < n) v += bR * P[i] * ratio(P[i + 1], S[i]);
      dY[n + i] = v;
    }
  };

  Solution sol;
  sol.range = pr.range;
  sol.h = pr.h;
  sol.marginals = detail::empty_series(pr.times, s.lattice.window_first, pr.out_count);
  const int pair_first = std::max(s.lattice.window_first, pr.range.first + 1);
  const int pair_count = std::max(0, s.lattice.window_last - pair_first + 1);
  sol.pairs = detail::empty_pairs(pr.times, pair_first, pair_count, false);
  integrate_on_grid(
      rhs, y, pr.times, pr.breaks, pr.h,
      [&](std::size_t j, const std::vector<double>& Y) {
        for (int o = 0; o < pr.out_count; ++o) {
          const std::size_t i = static_cast<std::size_t>(pr.out_first + o);
          sol.marginals.S[o][j] = Y[i];
          sol.marginals.I[o][j] = 1.0 - Y[i];
          sol.marginals.R[o][j] = 0.0;
        }
        for (int o = 0; o < pair_count; ++o) {
          const std::size_t i = static_cast<std::size_t>(pair_first - pr.range.first + o);
          sol.pairs.ss[o][j] = Y[n + i];
        }
      },
      [](double, std::vector<double>&) {});
  return sol;
}

// Picks the exact solver matching the lattice and the presence of recovery.
inline Solution solve(const Scenario& s, const SolverConfig& cfg = {}) {
  if (s.two_sided()) return solve_two_sided(s, cfg);
  return solve_sir_bass_one_sided(s, cfg);
}

// Closure identity P(S_k and S_{k-1}) = e^{-int p_k} S_k^0 [S_{k-1}] on a one-sided lattice.
inline std::vector<double> pair_marginal_ss(int k, const MarginalSeries& m, const Scenario& s) {
  const auto& g = s.geometry();
  const double S0 = s.initial(k).S;
  std::vector<double> out(m.times.size());
  for (std::size_t j = 0; j < m.times.size(); ++j)
    out[j] = S0 == 0.0 ? 0.0 : std::exp(-s.params.p.integral(k, g.x(k), m.times[j])) * S0 * m.s(k - 1, j);
  return out;
}

// ---- aggregate model -----------------------------------------------------

struct AggregateSeries {
  std::vector<double> times, S, I, R;
};

// S' = -S (p + q I), I' = S (p + q I) - r I, R' = r I.
inline AggregateSeries solve_aggregate(double p, double q, double r, NodeInit init,
                                       const std::vector<double>& times, double h = 1e-3) {
  if (p < 0 || q < 0 || r < 0) throw ValidationError("negative rate in aggregate model", {}, {});
  const double sum = init.S + init.I + init.R;
  if (std::abs(sum - 1.0) > kSumRenormalize) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "probabilities sum to %g", sum);
    throw ValidationError(buf, {}, {});
  }
  std::vector<double> y{init.S, init.I, init.R};
  auto rhs = [&](double, const std::vector<double>& Y, std::vector<double>& d) {
    const double inf = Y[0] * (p + q * Y[1]);
    d[0] = -inf;
    d[1] = inf - r * Y[1];
    d[2] = r * Y[1];
  };
  AggregateSeries out;
  out.times = times;
  out.S.resize(times.size());
  out.I.resize(times.size());
  out.R.resize(times.size());
  integrate_on_grid(
      rhs, y, times, {}, h,
      [&](std::size_t j, const std::vector<double>& Y) {
        out.S[j] = Y[0];
        out.I[j] = Y[1];
        out.R[j] = Y[2];
      },
      [](double, std::vector<double>&) {});
  return out;
}

}  // namespace sirbass
