#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace sirbass {

enum class Engine {
  discrete,          // event-driven, same law as repeated step_discrete
  discrete_literal,  // node-by-node sweep of step_discrete
  continuous,        // exponential clocks with thinning
};

inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct SimulationConfig {
  std::uint64_t seed = kDefaultSeed;
  long replications = 1000;
  double dt = 1e-3;  // discrete engines only
  Engine engine = Engine::discrete;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Raised when a discrete step would need a transition probability above 1.
class StepSizeError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

struct LatticeState {
  double time = 0.0;
  int first_node = 0;
  std::vector<NodeState> x;
};

inline LatticeState sample_initial_state(const Scenario& s, int first, int last, Rng& rng) {
  LatticeState st;
  st.first_node = first;
  st.x.resize(static_cast<std::size_t>(last - first + 1));
  for (int k = first; k <= last; ++k) {
    const auto v = s.initial(k);
    const double u = rng.uniform();
    st.x[static_cast<std::size_t>(k - first)] =
        u < v.S ? NodeState::susceptible : (u < v.S + v.I ? NodeState::infected : NodeState::recovered);
  }
  return st;
}

// One synchronous step of the discrete-time process: every node moves
// independently given the state at the start of the step.
inline LatticeState step_discrete(const LatticeState& state, const Scenario& s, double dt, Rng& rng) {
  LatticeState next = state;
  next.time = state.time + dt;
  const std::size_t n = state.x.size();
  const bool two = s.two_sided();
  auto infected = [&](std::size_t i) { return state.x[i] == NodeState::infected; };
  for (std::size_t i = 0; i < n; ++i) {
    const int k = state.first_node + static_cast<int>(i);
    const auto xs = state.x[i];
    if (xs == NodeState::recovered) continue;
    const Rates rt = s.rates(k, state.time);
    if (xs == NodeState::susceptible) {
      double lambda = rt.p;
      if (i > 0 && infected(i - 1)) lambda += rt.q_left;
      if (two && i + 1 < n && infected(i + 1)) lambda += rt.q_right;
      if (dt * (rt.p + rt.q_left + (two ? rt.q_right : 0.0)) > 1.0)
        throw StepSizeError("step size too large: infection probability exceeds 1", k, state.time);
      if (lambda > 0.0 && rng.bernoulli(dt * lambda)) next.x[i] = NodeState::infected;
    } else {
      if (dt * rt.r > 1.0) throw StepSizeError("step size too large: recovery probability exceeds 1", k, state.time);
      if (rt.r > 0.0 && rng.bernoulli(dt * rt.r)) next.x[i] = NodeState::recovered;
    }
  }
  return next;
}

// Infection and recovery times of every simulated node in one replication.
// A node is susceptible on [0, infected_at), infected on [infected_at, recovered_at).
struct Trajectory {
  int first_node = 0;
  std::vector<double> infected_at;
  std::vector<double> recovered_at;

  NodeState state(int k, double t) const {
    const auto i = static_cast<std::size_t>(k - first_node);
    if (t < infected_at[i]) return NodeState::susceptible;
    return t < recovered_at[i] ? NodeState::infected : NodeState::recovered;
  }
  int last_node() const { return first_node + static_cast<int>(infected_at.size()) - 1; }
};

namespace detail {

inline double sup_time(const TemporalPart& tp, double horizon) {
  if (auto pw = std::get_if<PiecewiseTime>(&tp)) {
    double best = pw->values[0], at = 0.0;
    for (std::size_t j = 0; j < pw->breaks.size() && pw->breaks[j] <= horizon; ++j)
      if (pw->values[j + 1] > best) best = pw->values[j + 1], at = pw->breaks[j];
    return at;
  }
  if (auto e = std::get_if<ExponentialTime>(&tp)) return e->rate < 0.0 ? horizon : 0.0;
  return 0.0;
}

}  // namespace detail

// Event-driven simulator over the exact node range of a scenario.
class Simulator {
public:
  Simulator(const Scenario& s, Engine engine, double dt)
      : s_(validate_scenario(s)), engine_(engine), dt_(dt), range_(compute_range(s_)) {
    if (engine_ != Engine::continuous && !(dt_ > 0.0)) throw ValidationError("dt must be positive", {}, {});
    const auto& g = s_.geometry();
    const std::size_t n = static_cast<std::size_t>(range_.size());
    two_ = s_.two_sided();
    p_.resize(n), ql_.resize(n), qr_.assign(n, 0.0), r_.resize(n);
    const double T = s_.horizon;
    const auto& P = s_.params;
    const double fp = time_sup(P.p.time, T), fl = time_sup(P.q_left.time, T), fr = time_sup(P.q_right.time, T),
                 frr = time_sup(P.r.time, T);
    for (std::size_t i = 0; i < n; ++i) {
      const int k = range_.first + static_cast<int>(i);
      const double x = g.x(k);
      p_[i] = P.p.spatial(k, x);
      ql_[i] = i == 0 ? 0.0 : P.q_left.spatial(k, x);
      if (two_ && i + 1 < n) qr_[i] = P.q_right.spatial(k, x);
      r_[i] = P.r.spatial(k, x);
      if (engine_ != Engine::continuous) {
        if (dt_ * (p_[i] * fp + ql_[i] * fl + qr_[i] * fr) > 1.0 + 1e-12) {
          const double t = detail::sup_time(P.q_left.time, T);
          char buf[96];
          std::snprintf(buf, sizeof buf, "step size too large: dt*(p+qL+qR)=%g exceeds 1",
                        dt_ * (p_[i] * fp + ql_[i] * fl + qr_[i] * fr));
          throw StepSizeError(buf, k, t);
        }
        if (dt_ * r_[i] * frr > 1.0 + 1e-12)
          throw StepSizeError("step size too large: dt*r exceeds 1", k, detail::sup_time(P.r.time, T));
      }
    }
    bound_p_ = fp, bound_l_ = fl, bound_r_ = fr, bound_rec_ = frr;
    steady_ = P.p.steady() && P.q_left.steady() && P.q_right.steady() && P.r.steady();
    last_step_ = engine_ == Engine::continuous ? 0 : static_cast<long>(std::llround(T / dt_));
  }

  const Scenario& scenario() const { return s_; }
  const NodeRange& range() const { return range_; }
  Engine engine() const { return engine_; }
  double dt() const { return dt_; }

  // Time at which a discrete engine is observed for a requested time t.
  double observation_time(double t) const {
    if (engine_ == Engine::continuous) return t;
    return static_cast<double>(std::llround(t / dt_)) * dt_;
  }

  struct Workspace {
    std::vector<NodeState> x;
    std::vector<std::uint32_t> version;
    struct Event {
      double when;
      std::uint32_t node;
      std::uint32_t version;
      bool operator>(const Event& o) const { return when != o.when ? when > o.when : node > o.node; }
    };
    std::vector<Event> heap;
    std::vector<std::uint32_t> batch;
  };

  void run(Rng& rng, Workspace& ws, Trajectory& out) const {
    if (engine_ == Engine::discrete_literal) return run_literal(rng, out);
    const std::size_t n = static_cast<std::size_t>(range_.size());
    const double inf = std::numeric_limits<double>::infinity();
    out.first_node = range_.first;
    out.infected_at.assign(n, inf);
    out.recovered_at.assign(n, inf);
    ws.x.resize(n);
    ws.version.assign(n, 0);
    ws.heap.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = s_.initial(range_.first + static_cast<int>(i));
      const double u = rng.uniform();
      ws.x[i] = u < v.S ? NodeState::susceptible : (u < v.S + v.I ? NodeState::infected : NodeState::recovered);
      if (ws.x[i] != NodeState::susceptible) out.infected_at[i] = 0.0;
      if (ws.x[i] == NodeState::recovered) out.recovered_at[i] = 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) schedule(i, 0.0, rng, ws);
    if (engine_ == Engine::continuous)
      run_continuous(rng, ws, out);
    else
      run_discrete(rng, ws, out);
  }

private:
  using Event = Workspace::Event;

  // Current rate of the node's next transition at time t, and an upper bound over the horizon.
  double rate(std::size_t i, double t, const Workspace& ws) const {
    const auto& P = s_.params;
    if (ws.x[i] == NodeState::infected) return r_[i] * time_value(P.r.time, t);
    double v = p_[i] * time_value(P.p.time, t);
    if (i > 0 && ws.x[i - 1] == NodeState::infected) v += ql_[i] * time_value(P.q_left.time, t);
    if (two_ && i + 1 < ws.x.size() && ws.x[i + 1] == NodeState::infected)
      v += qr_[i] * time_value(P.q_right.time, t);
    return v;
  }
  double bound(std::size_t i, const Workspace& ws) const {
    if (ws.x[i] == NodeState::infected) return r_[i] * bound_rec_;
    double v = p_[i] * bound_p_;
    if (i > 0 && ws.x[i - 1] == NodeState::infected) v += ql_[i] * bound_l_;
    if (two_ && i + 1 < ws.x.size() && ws.x[i + 1] == NodeState::infected) v += qr_[i] * bound_r_;
    return v;
  }

  // Draws the next candidate transition of node i at or after `from`
  // (a time for the continuous engine, a step index for the discrete one).
  void schedule(std::size_t i, double from, Rng& rng, Workspace& ws) const {
    ++ws.version[i];
    if (ws.x[i] == NodeState::recovered) return;
    const double b = bound(i, ws);
    if (!(b > 0.0)) return;
    double when;
    if (engine_ == Engine::continuous) {
      when = from + rng.exponential(b);
      if (when > s_.horizon) return;
    } else {
      const std::uint64_t g = rng.geometric(dt_ * b);
      if (g > static_cast<std::uint64_t>(last_step_)) return;
      when = from + static_cast<double>(g);
      if (when >= static_cast<double>(last_step_)) return;
    }
    ws.heap.push_back({when, static_cast<std::uint32_t>(i), ws.version[i]});
    std::push_heap(ws.heap.begin(), ws.heap.end(), std::greater<>{});
  }

  bool accept(std::size_t i, double t, Rng& rng, const Workspace& ws) const {
    if (steady_) return true;
    const double b = bound(i, ws);
    return rng.uniform() * b < rate(i, t, ws);
  }

  void apply(std::size_t i, double t, Workspace& ws, Trajectory& out) const {
    if (ws.x[i] == NodeState::susceptible) {
      ws.x[i] = NodeState::infected;
      out.infected_at[i] = t;
    } else {
      ws.x[i] = NodeState::recovered;
      out.recovered_at[i] = t;
    }
  }

  Event pop(Workspace& ws) const {
    std::pop_heap(ws.heap.begin(), ws.heap.end(), std::greater<>{});
    Event e = ws.heap.back();
    ws.heap.pop_back();
    return e;
  }

  void run_continuous(Rng& rng, Workspace& ws, Trajectory& out) const {
    const std::size_t n = ws.x.size();
    while (!ws.heap.empty()) {
      const Event e = pop(ws);
      if (e.version != ws.version[e.node]) continue;
      const std::size_t i = e.node;
      if (!accept(i, e.when, rng, ws)) {
        schedule(i, e.when, rng, ws);
        continue;
      }
      apply(i, e.when, ws, out);
      schedule(i, e.when, rng, ws);
      if (i > 0) schedule(i - 1, e.when, rng, ws);
      if (i + 1 < n) schedule(i + 1, e.when, rng, ws);
    }
  }

  void run_discrete(Rng& rng, Workspace& ws, Trajectory& out) const {
    const std::size_t n = ws.x.size();
    while (!ws.heap.empty()) {
      const double step = ws.heap.front().when;
      const double t = step * dt_;
      ws.batch.clear();
      while (!ws.heap.empty() && ws.heap.front().when == step) {
        const Event e = pop(ws);
        if (e.version != ws.version[e.node]) continue;
        // rates use the state at the start of the step: decide before applying anything
        if (accept(e.node, t, rng, ws))
          ws.batch.push_back(e.node);
        else
          schedule(e.node, step + 1.0, rng, ws);
      }
      const double visible = (step + 1.0) * dt_;
      for (auto i : ws.batch) apply(i, visible, ws, out);
      for (auto i : ws.batch) {
        schedule(i, step + 1.0, rng, ws);
        if (i > 0) schedule(i - 1, step + 1.0, rng, ws);
        if (i + 1 < n) schedule(i + 1, step + 1.0, rng, ws);
      }
    }
  }

  void run_literal(Rng& rng, Trajectory& out) const {
    const std::size_t n = static_cast<std::size_t>(range_.size());
    const double inf = std::numeric_limits<double>::infinity();
    LatticeState st = sample_initial_state(s_, range_.first, range_.last, rng);
    out.first_node = range_.first;
    out.infected_at.assign(n, inf);
    out.recovered_at.assign(n, inf);
    for (std::size_t i = 0; i < n; ++i) {
      if (st.x[i] != NodeState::susceptible) out.infected_at[i] = 0.0;
      if (st.x[i] == NodeState::recovered) out.recovered_at[i] = 0.0;
    }
    for (long step = 0; step < last_step_; ++step) {
      st.time = static_cast<double>(step) * dt_;
      LatticeState next = step_discrete(st, s_, dt_, rng);
      const double visible = static_cast<double>(step + 1) * dt_;
      for (std::size_t i = 0; i < n; ++i)
        if (next.x[i] != st.x[i]) {
          if (next.x[i] == NodeState::infected)
            out.infected_at[i] = visible;
          else
            out.recovered_at[i] = visible;
        }
      st = std::move(next);
    }
  }

  Scenario s_;
  Engine engine_;
  double dt_;
  NodeRange range_;
  bool two_ = false;
  bool steady_ = true;
  long last_step_ = 0;
  std::vector<double> p_, ql_, qr_, r_;
  double bound_p_ = 0, bound_l_ = 0, bound_r_ = 0, bound_rec_ = 0;
};

// Single continuous-time trajectory.
inline Trajectory simulate_ct(const Scenario& s, Rng& rng) {
  Simulator sim(s, Engine::continuous, 0.0);
  Simulator::Workspace ws;
  Trajectory tr;
  sim.run(rng, ws, tr);
  return tr;
}

// Runs replications in parallel. Each worker owns an accumulator made by
// `make()`, sees its replications in increasing order, and the accumulators
// are merged in worker order. Replication r always uses Rng(seed, r).
template <class Acc, class Make>
Acc run_ensemble(const Simulator& sim, const SimulationConfig& cfg, Make make) {
  if (cfg.replications < 1) throw ValidationError("replication count must be positive", {}, {});
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<long>(workers, cfg.replications));
  std::vector<Acc> accs;
  accs.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) accs.push_back(make());
  auto body = [&](unsigned w) {
    const long lo = cfg.replications * w / workers, hi = cfg.replications * (w + 1) / workers;
    Simulator::Workspace ws;
    Trajectory tr;
    for (long rep = lo; rep < hi; ++rep) {
      Rng rng(cfg.seed, static_cast<std::uint64_t>(rep));
      sim.run(rng, ws, tr);
      accs[w].observe(tr, rep);
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }
  for (unsigned w = 1; w < workers; ++w) accs[0].merge(accs[w]);
  return std::move(accs[0]);
}

// ---- marginal estimates ----------------------------------------------------

struct EnsembleEstimate {
  std::vector<double> times;
  int first_node = 0;
  long replications = 0;
  std::uint64_t seed = 0;
  // [node][time][state] with state order S, I, R
  std::vector<std::vector<std::array<double, 3>>> mean;
  std::vector<std::vector<std::array<double, 3>>> stderr_;

  int last_node() const { return first_node + static_cast<int>(mean.size()) - 1; }
  double m(int k, std::size_t j, NodeState s) const {
    return mean[static_cast<std::size_t>(k - first_node)][j][static_cast<std::size_t>(s)];
  }
  double se(int k, std::size_t j, NodeState s) const {
    return stderr_[static_cast<std::size_t>(k - first_node)][j][static_cast<std::size_t>(s)];
  }
};

namespace detail {

struct CountAcc {
  int first = 0, count = 0;
  std::vector<double> obs_times;
  std::vector<std::int64_t> c;  // [node][time][state]

  void observe(const Trajectory& tr, long) {
    const std::size_t nt = obs_times.size();
    for (int o = 0; o < count; ++o)
      for (std::size_t j = 0; j < nt; ++j)
        ++c[(static_cast<std::size_t>(o) * nt + j) * 3 + static_cast<std::size_t>(tr.state(first + o, obs_times[j]))];
  }
  void merge(const CountAcc& other) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += other.c[i];
  }
};

}  // namespace detail

inline double binomial_stderr(double phat, long M) { return std::sqrt(std::max(0.0, phat * (1.0 - phat)) / static_cast<double>(M)); }

// Monte Carlo frequencies of S, I, R for every window node at the requested times.
inline EnsembleEstimate estimate_marginals(const Scenario& s, const SimulationConfig& cfg,
                                           std::vector<double> times = {}) {
  if (cfg.replications < 2) throw ValidationError("estimate_marginals needs M >= 2", {}, {});
  Simulator sim(s, cfg.engine, cfg.dt);
  if (times.empty()) times = make_time_grid(s.horizon, s.grid_step);
  detail::CountAcc proto;
  proto.first = s.lattice.window_first;
  proto.count = s.lattice.window_last - s.lattice.window_first + 1;
  for (double t : times) proto.obs_times.push_back(sim.observation_time(t));
  proto.c.assign(static_cast<std::size_t>(proto.count) * times.size() * 3, 0);
  auto acc = run_ensemble<detail::CountAcc>(sim, cfg, [&] { return proto; });

  EnsembleEstimate est;
  est.times = times;
  est.first_node = proto.first;
  est.replications = cfg.replications;
  est.seed = cfg.seed;
  est.mean.assign(static_cast<std::size_t>(proto.count), std::vector<std::array<double, 3>>(times.size()));
  est.stderr_ = est.mean;
  const double M = static_cast<double>(cfg.replications);
  for (std::size_t o = 0; o < est.mean.size(); ++o)
    for (std::size_t j = 0; j < times.size(); ++j)
      for (std::size_t st = 0; st < 3; ++st) {
        const double ph = static_cast<double>(acc.c[(o * times.size() + j) * 3 + st]) / M;
        est.mean[o][j][st] = ph;
        est.stderr_[o][j][st] = binomial_stderr(ph, cfg.replications);
      }
  return est;
}

// ---- front statistics -------------------------------------------------------

struct FrontStat {
  std::vector<double> times;
  long replications = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> front;  // [time][replication], -1 when no node is infected
  std::vector<long> none_count;         // per time
  std::vector<long> saturated_count;    // per time: front at the edge of the simulated range
  std::vector<double> mean, variance;   // over replications with a front

  // Empirical CDF of (front - q t) / sqrt(t) at time index j, sorted ascending.
  std::vector<double> normalized(std::size_t j, double q) const {
    std::vector<double> z;
    const double t = times[j];
    for (int f : front[j])
      if (f >= 0) z.push_back((f - q * t) / std::sqrt(t));
    std::sort(z.begin(), z.end());
    return z;
  }

  // Kolmogorov-Smirnov distance between the normalized front and N(0, q).
  double ks_distance(std::size_t j, double q) const {
    const auto z = normalized(j, q);
    double d = 0.0;
    const double n = static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (i + 1 < z.size() && z[i + 1] == z[i]) continue;  // evaluate at the top of each jump
      const double F = special::normal_cdf(z[i], q);
      std::size_t lo = i;
      while (lo > 0 && z[lo - 1] == z[i]) --lo;
      d = std::max({d, std::abs(static_cast<double>(i + 1) / n - F), std::abs(static_cast<double>(lo) / n - F)});
    }
    return d;
  }
};

namespace detail {

struct FrontAcc {
  std::vector<double> obs_times;
  std::vector<std::vector<int>>* front = nullptr;  // shared, each replication writes its own slot

  void observe(const Trajectory& tr, long rep) {
    for (std::size_t j = 0; j < obs_times.size(); ++j) {
      int f = -1;
      for (int k = tr.last_node(); k >= tr.first_node; --k)
        if (tr.state(k, obs_times[j]) == NodeState::infected) {
          f = k;
          break;
        }
      (*front)[j][static_cast<std::size_t>(rep)] = f;
    }
  }
  void merge(const FrontAcc&) {}
};

}  // namespace detail

// Front location max{k : x_k(t) = i} per replication and time.
inline FrontStat front_statistics(const Scenario& s, const SimulationConfig& cfg, const std::vector<double>& times) {
  Simulator sim(s, cfg.engine, cfg.dt);
  FrontStat fs;
  fs.times = times;
  fs.replications = cfg.replications;
  fs.seed = cfg.seed;
  fs.front.assign(times.size(), std::vector<int>(static_cast<std::size_t>(cfg.replications), -1));
  detail::FrontAcc proto;
  for (double t : times) proto.obs_times.push_back(sim.observation_time(t));
  proto.front = &fs.front;
  run_ensemble<detail::FrontAcc>(sim, cfg, [&] { return proto; });

  const int edge = sim.range().last;
  const bool bounded = s.lattice.topology == Topology::finite_line && edge == s.lattice.size - 1;
  for (std::size_t j = 0; j < times.size(); ++j) {
    long none = 0, sat = 0, cnt = 0;
    double sum = 0.0;
    for (int f : fs.front[j]) {
      if (f < 0) {
        ++none;
        continue;
      }
      if (f == edge && !bounded) ++sat;
      sum += f;
      ++cnt;
    }
    const double mu = cnt ? sum / static_cast<double>(cnt) : std::numeric_limits<double>::quiet_NaN();
    double ss = 0.0;
    for (int f : fs.front[j])
      if (f >= 0) ss += (f - mu) * (f - mu);
    fs.none_count.push_back(none);
    fs.saturated_count.push_back(sat);
    fs.mean.push_back(mu);
    fs.variance.push_back(cnt > 1 ? ss / static_cast<double>(cnt - 1) : std::numeric_limits<double>::quiet_NaN());
  }
  return fs;
}

// ---- neighbourhood statistics ---------------------------------------------

// Counts of the joint state (x_{k-1}, x_k, x_{k+1}) at time t.
struct NeighbourhoodCounts {
  int k = 0;
  double t = 0.0;
  long replications = 0;
  std::array<std::int64_t, 27> c{};  // index 9 a + 3 b + c

  std::int64_t at(NodeState a, NodeState b, NodeState d) const {
    return c[9 * static_cast<std::size_t>(a) + 3 * static_cast<std::size_t>(b) + static_cast<std::size_t>(d)];
  }
};

namespace detail {

struct NeighbourhoodAcc {
  std::vector<int> nodes;
  std::vector<double> obs;  // observation time per entry
  std::vector<std::array<std::int64_t, 27>> c;
  void observe(const Trajectory& tr, long) {
    for (std::size_t e = 0; e < nodes.size(); ++e) {
      const int k = nodes[e];
      auto st = [&](int j) {
        return j < tr.first_node || j > tr.last_node() ? NodeState::susceptible : tr.state(j, obs[e]);
      };
      ++c[e][9 * static_cast<std::size_t>(st(k - 1)) + 3 * static_cast<std::size_t>(st(k)) +
             static_cast<std::size_t>(st(k + 1))];
    }
  }
  void merge(const NeighbourhoodAcc& o) {
    for (std::size_t e = 0; e < c.size(); ++e)
      for (std::size_t i = 0; i < 27; ++i) c[e][i] += o.c[e][i];
  }
};

}  // namespace detail

// One entry per (node, time) request. Nodes outside the simulated range read as susceptible.
inline std::vector<NeighbourhoodCounts> estimate_neighbourhoods(const Scenario& s, const SimulationConfig& cfg,
                                                                const std::vector<std::pair<int, double>>& at) {
  Simulator sim(s, cfg.engine, cfg.dt);
  detail::NeighbourhoodAcc proto;
  for (auto [k, t] : at) {
    proto.nodes.push_back(k);
    proto.obs.push_back(sim.observation_time(t));
  }
  proto.c.assign(at.size(), {});
  auto acc = run_ensemble<detail::NeighbourhoodAcc>(sim, cfg, [&] { return proto; });
  std::vector<NeighbourhoodCounts> out;
  for (std::size_t e = 0; e < at.size(); ++e) out.push_back({at[e].first, at[e].second, cfg.replications, acc.c[e]});
  return out;
}

// Mean and standard error of a per-replication statistic given its sum and sum of squares.
struct MeanSe {
  double mean = 0.0, se = 0.0;
};

inline MeanSe mean_se(double sum, double sumsq, double n) {
  const double m = sum / n;
  const double var = std::max(0.0, (sumsq / n - m * m)) * n / std::max(1.0, n - 1.0);
  return {m, std::sqrt(var / n)};
}

// Closure identity P(S_{k-1}, S_k) = c P(S_{k-1}) with c = e^{-int p_k} S_k^0:
// mean and standard error of 1[S_{k-1} S_k] - c 1[S_{k-1}].
inline MeanSe closure_residual(const NeighbourhoodCounts& nc, double c) {
  std::int64_t both = 0, prev = 0;
  for (int b = 0; b < 3; ++b)
    for (int d = 0; d < 3; ++d) {
      const auto a = NodeState::susceptible;
      const auto n = nc.at(a, static_cast<NodeState>(b), static_cast<NodeState>(d));
      prev += n;
      if (b == 0) both += n;
    }
  const double sum = static_cast<double>(both) - c * static_cast<double>(prev);
  const double sumsq = static_cast<double>(both) * (1 - c) * (1 - c) + static_cast<double>(prev - both) * c * c;
  return mean_se(sum, sumsq, static_cast<double>(nc.replications));
}

// Given x_k = s, empirical covariance of 1[x_{k-1} = a] and 1[x_{k+1} = b] with its
// standard error; zero covariance for every (a, b) is the factorization.
struct Factorization {
  long conditioned = 0;
  std::array<MeanSe, 9> cov{};  // index 3 a + b
  double max_z = 0.0;           // max |cov| / se over cells with se > 0
};

inline Factorization markov_factorization(const NeighbourhoodCounts& nc) {
  Factorization f;
  std::array<double, 9> n{};
  double tot = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int d = 0; d < 3; ++d) {
      n[static_cast<std::size_t>(3 * a + d)] =
          static_cast<double>(nc.at(static_cast<NodeState>(a), NodeState::susceptible, static_cast<NodeState>(d)));
      tot += n[static_cast<std::size_t>(3 * a + d)];
    }
  f.conditioned = static_cast<long>(tot);
  if (tot < 2) return f;
  std::array<double, 3> pa{}, pb{};
  for (int a = 0; a < 3; ++a)
    for (int d = 0; d < 3; ++d) {
      pa[static_cast<std::size_t>(a)] += n[static_cast<std::size_t>(3 * a + d)] / tot;
      pb[static_cast<std::size_t>(d)] += n[static_cast<std::size_t>(3 * a + d)] / tot;
    }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      // Z = (A - pa)(B - pb) over the conditioned replications
      double sum = 0.0, sumsq = 0.0;
      for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y) {
          const double z = ((x == a) - pa[static_cast<std::size_t>(a)]) * ((y == b) - pb[static_cast<std::size_t>(b)]);
          const double w = n[static_cast<std::size_t>(3 * x + y)];
          sum += w * z;
          sumsq += w * z * z;
        }
      const auto ms = mean_se(sum, sumsq, tot);
      f.cov[static_cast<std::size_t>(3 * a + b)] = ms;
      if (ms.se > 0.0) f.max_z = std::max(f.max_z, std::abs(ms.mean) / ms.se);
    }
  return f;
}

}  // namespace sirbass
