#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "descriptor.hpp"
#include "special.hpp"

namespace sirbass {

enum class NodeState : std::uint8_t { susceptible, infected, recovered };

enum class Topology { finite_line, semi_infinite_line, infinite_line };
enum class Sidedness { one_sided, two_sided };

// Node k sits at x = x0 + k * dx.
struct Geometry {
  double x0 = 0.0;
  double dx = 1.0;
  double x(int k) const { return x0 + k * dx; }
  bool operator==(const Geometry&) const = default;
};

struct LatticeSpec {
  Topology topology = Topology::finite_line;
  Sidedness sidedness = Sidedness::one_sided;
  int size = 1;  // finite lines only
  int window_first = 0;
  int window_last = 0;
  Geometry geometry;
  bool operator==(const LatticeSpec&) const = default;
};

struct Rates {
  double p = 0.0, q_left = 0.0, q_right = 0.0, r = 0.0;
};

// One-sided lattices only read q_left (called q).
struct ParamField {
  Descriptor p;
  Descriptor q_left;
  Descriptor q_right;
  Descriptor r;
  bool operator==(const ParamField&) const = default;
};

inline Rates eval_params(const ParamField& f, const Geometry& g, int k, double t) {
  const double x = g.x(k);
  Rates out{f.p(k, x, t), f.q_left(k, x, t), f.q_right(k, x, t), f.r(k, x, t)};
  for (double v : {out.p, out.q_left, out.q_right, out.r})
    if (!std::isfinite(v) || v < 0.0)
      throw DomainError("rate evaluates to " + std::to_string(v) + " at node " + std::to_string(k) +
                        ", t=" + std::to_string(t));
  return out;
}

struct NodeInit {
  double S = 1.0, I = 0.0, R = 0.0;
  bool operator==(const NodeInit&) const = default;
};

inline constexpr double kSumExact = 1e-12;
inline constexpr double kSumRenormalize = 1e-9;

struct InitialDistribution {
  SpatialPart susceptible = ConstantSpace{1.0};
  SpatialPart infected = ConstantSpace{0.0};
  SpatialPart recovered = ConstantSpace{0.0};
  std::map<int, NodeInit> overrides;

  NodeInit raw(int k, const Geometry& g) const {
    if (auto it = overrides.find(k); it != overrides.end()) return it->second;
    const double x = g.x(k);
    return {space_value(susceptible, k, x), space_value(infected, k, x), space_value(recovered, k, x)};
  }

  // Triple at node k, renormalized when its sum is off by at most kSumRenormalize.
  NodeInit at(int k, const Geometry& g) const {
    NodeInit v = raw(k, g);
    const double sum = v.S + v.I + v.R;
    if (std::abs(sum - 1.0) > kSumExact && std::abs(sum - 1.0) <= kSumRenormalize) {
      v.S /= sum;
      v.I /= sum;
      v.R /= sum;
    }
    return v;
  }

  bool operator==(const InitialDistribution&) const = default;
};

struct Scenario {
  LatticeSpec lattice;
  ParamField params;
  InitialDistribution init;
  double horizon = 1.0;
  double grid_step = 0.1;
  bool operator==(const Scenario&) const = default;

  const Geometry& geometry() const { return lattice.geometry; }
  bool two_sided() const { return lattice.sidedness == Sidedness::two_sided; }
  Rates rates(int k, double t) const { return eval_params(params, lattice.geometry, k, t); }
  NodeInit initial(int k) const { return init.at(k, lattice.geometry); }
};

// t_j = j * step, with the horizon appended when it is not a multiple of step.
inline std::vector<double> make_time_grid(double horizon, double step) {
  std::vector<double> grid;
  const double ratio = horizon / step;
  const auto n = static_cast<long>(std::floor(ratio + 1e-9));
  grid.reserve(static_cast<std::size_t>(n) + 2);
  for (long j = 0; j <= n; ++j) grid.push_back(std::min(horizon, j * step));
  if (horizon - grid.back() > 1e-9 * std::max(1.0, horizon))
    grid.push_back(horizon);
  else
    grid.back() = horizon;
  return grid;
}

// ---- validation ----------------------------------------------------------

struct Violation {
  std::string message;
  std::optional<int> node;
  std::optional<double> time;

  std::string str() const {
    std::string s = message;
    if (node) s += " at node " + std::to_string(*node);
    if (time) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%s t=%g", node ? "," : " at", *time);
      s += buf;
    }
    return s;
  }
};

class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(std::vector<Violation> v)
      : std::runtime_error(join(v)), violations_(std::move(v)) {}
  explicit ValidationError(std::string message, std::optional<int> node = {}, std::optional<double> time = {})
      : ValidationError(std::vector<Violation>{{std::move(message), node, time}}) {}
  const std::vector<Violation>& violations() const { return violations_; }

private:
  static std::string join(const std::vector<Violation>& v) {
    std::string s;
    for (const auto& x : v) {
      if (!s.empty()) s += "; ";
      s += x.str();
    }
    return s.empty() ? "invalid scenario" : s;
  }
  std::vector<Violation> violations_;
};

// Nodes that a solver or simulator must carry to produce exact window marginals.
struct NodeRange {
  int first = 0;
  int last = 0;
  int extended_left = 0;   // nodes added left of the window
  int extended_right = 0;  // nodes added right of the window
  int size() const { return last - first + 1; }
  bool contains(int k) const { return k >= first && k <= last; }
};

// Probability that influence crosses `gap` nodes within the horizon is at most
// P(Poisson(q_max * T) >= gap); the window is widened until that is below this.
inline constexpr double kTruncationTolerance = 1e-16;
inline constexpr int kMaxExtension = 1000000;

namespace detail {

inline double contagion_sup(const Scenario& s, const Descriptor& q, int a, int b) {
  double m = 0.0;
  const auto& g = s.lattice.geometry;
  for (int k = a; k <= b; ++k) m = std::max(m, q.sup(k, g.x(k), s.horizon));
  return m;
}

// Smallest gap L such that a chain of L contagions is negligible; direction -1 grows left.
inline int extension(const Scenario& s, const Descriptor& q, int anchor, int direction) {
  int L = 0;
  for (int iter = 0; iter < 64; ++iter) {
    const int a = direction < 0 ? anchor - L : anchor;
    const int b = direction < 0 ? anchor : anchor + L;
    const double qt = contagion_sup(s, q, a, b) * s.horizon;
    int need = 0;
    if (qt > 0.0) {
      need = std::max(1, static_cast<int>(std::ceil(qt)));
      while (special::poisson_tail(need, qt) >= kTruncationTolerance) {
        need = need < 64 ? need + 1 : need + need / 8;
        if (need > kMaxExtension) throw DomainError("cannot bound window extension: contagion rate too large");
      }
    }
    if (need <= L) return L;
    L = need;
  }
  throw DomainError("window extension did not settle");
}

}  // namespace detail

inline NodeRange compute_range(const Scenario& s) {
  const auto& lat = s.lattice;
  NodeRange r{lat.window_first, lat.window_last, 0, 0};
  const bool two = s.two_sided();
  switch (lat.topology) {
    case Topology::finite_line:
      r.first = 0;
      r.last = two ? lat.size - 1 : lat.window_last;
      break;
    case Topology::semi_infinite_line:
      r.first = 0;
      if (two) r.extended_right = detail::extension(s, s.params.q_right, lat.window_last, +1);
      r.last = lat.window_last + r.extended_right;
      break;
    case Topology::infinite_line:
      r.extended_left = detail::extension(s, s.params.q_left, lat.window_first, -1);
      if (two) r.extended_right = detail::extension(s, s.params.q_right, lat.window_last, +1);
      r.first = lat.window_first - r.extended_left;
      r.last = lat.window_last + r.extended_right;
      break;
  }
  if (lat.topology != Topology::infinite_line) r.extended_left = 0;
  return r;
}

namespace detail {

inline void check_temporal(const TemporalPart& tp, const std::string& name, std::vector<Violation>& out) {
  if (auto pw = std::get_if<PiecewiseTime>(&tp)) {
    if (pw->values.size() != pw->breaks.size() + 1) {
      out.push_back({name + ": piecewise descriptor needs one more value than breaks", {}, {}});
      return;
    }
    for (std::size_t j = 1; j < pw->breaks.size(); ++j)
      if (!(pw->breaks[j] > pw->breaks[j - 1]))
        out.push_back({name + ": piecewise breaks must be strictly increasing", {}, pw->breaks[j]});
    for (std::size_t j = 0; j < pw->values.size(); ++j)
      if (!(pw->values[j] >= 0.0) || !std::isfinite(pw->values[j]))
        out.push_back({"negative rate " + name, {}, j == 0 ? 0.0 : pw->breaks[j - 1]});
  } else if (auto e = std::get_if<ExponentialTime>(&tp)) {
    if (!(e->amplitude >= 0.0) || !std::isfinite(e->amplitude) || !std::isfinite(e->rate))
      out.push_back({"negative rate " + name + " (exponential amplitude)", {}, {}});
  }
}

}  // namespace detail

// Every violation of the scenario invariants; empty means valid.
inline std::vector<Violation> check_scenario(const Scenario& s) {
  std::vector<Violation> out;
  const auto& lat = s.lattice;
  if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) out.push_back({"horizon must be positive", {}, {}});
  if (!(s.grid_step > 0.0) || !std::isfinite(s.grid_step)) out.push_back({"grid step must be positive", {}, {}});
  if (!(lat.geometry.dx > 0.0)) out.push_back({"geometry dx must be positive", {}, {}});
  if (lat.window_first > lat.window_last) out.push_back({"empty window", {}, {}});
  if (lat.topology == Topology::finite_line) {
    if (lat.size < 1) out.push_back({"finite line needs K >= 1", {}, {}});
    if (lat.window_first < 0 || lat.window_last > lat.size - 1)
      out.push_back({"window outside the finite line", {}, {}});
  }
  if (lat.topology == Topology::semi_infinite_line && lat.window_first < 0)
    out.push_back({"window outside the semi-infinite line", {}, {}});

  const std::pair<const Descriptor*, const char*> fields[] = {
      {&s.params.p, "p"}, {&s.params.q_left, "q"}, {&s.params.q_right, "qR"}, {&s.params.r, "r"}};
  for (const auto& [d, name] : fields) detail::check_temporal(d->time, name, out);
  for (const auto& [k, v] : s.init.overrides)
    if (lat.topology != Topology::infinite_line && (k < 0 || (lat.topology == Topology::finite_line && k >= lat.size)))
      out.push_back({"initial override outside the lattice", k, {}});
  if (!out.empty()) return out;

  NodeRange range;
  try {
    range = compute_range(s);
  } catch (const DomainError& e) {
    out.push_back({e.what(), {}, {}});
    return out;
  }

  const auto& g = lat.geometry;
  const bool two = s.two_sided();
  for (int k = range.first; k <= range.last; ++k) {
    for (const auto& [d, name] : fields) {
      if (d == &s.params.q_right && !two) continue;
      if (!covers_node(d->space, k)) {
        out.push_back({std::string("descriptor ") + name + " does not cover node", k, {}});
        continue;
      }
      const double lo = d->inf(k, g.x(k), s.horizon);
      if (!(lo >= 0.0) || !std::isfinite(d->sup(k, g.x(k), s.horizon))) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "negative rate %s=%g", name, lo);
        out.push_back({buf, k, {}});
      }
    }
    if (!s.init.overrides.count(k) &&
        !(covers_node(s.init.susceptible, k) && covers_node(s.init.infected, k) && covers_node(s.init.recovered, k))) {
      out.push_back({"initial distribution does not cover node", k, {}});
      continue;
    }
    const NodeInit v = s.init.raw(k, g);
    for (double c : {v.S, v.I, v.R})
      if (!(c >= 0.0 && c <= 1.0)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "initial probability %g outside [0,1]", c);
        out.push_back({buf, k, {}});
        break;
      }
    const double sum = v.S + v.I + v.R;
    if (!(std::abs(sum - 1.0) <= kSumRenormalize)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "probabilities sum to %g", sum);
      out.push_back({buf, k, {}});
    }
    if (out.size() > 50) break;
  }
  return out;
}

inline Scenario validate_scenario(const Scenario& raw) {
  auto v = check_scenario(raw);
  if (!v.empty()) throw ValidationError(std::move(v));
  return raw;
}

// ---- output series -------------------------------------------------------

// Per-node trajectories for nodes first_node .. first_node + S.size() - 1.
struct MarginalSeries {
  std::vector<double> times;
  int first_node = 0;
  std::vector<std::vector<double>> S, I, R;

  int node_count() const { return static_cast<int>(S.size()); }
  int last_node() const { return first_node + node_count() - 1; }
  std::size_t index(int k) const {
    if (k < first_node || k > last_node()) throw DomainError("node " + std::to_string(k) + " not in series");
    return static_cast<std::size_t>(k - first_node);
  }
  double s(int k, std::size_t j) const { return S[index(k)][j]; }
  double i(int k, std::size_t j) const { return I[index(k)][j]; }
  double r(int k, std::size_t j) const { return R[index(k)][j]; }
};

// Row k holds the pair (k-1, k).
struct PairMarginalSeries {
  std::vector<double> times;
  int first_node = 0;
  std::vector<std::vector<double>> ss;
  std::vector<std::vector<double>> sr;  // empty when not computed

  std::size_t index(int k) const {
    if (k < first_node || k >= first_node + static_cast<int>(ss.size()))
      throw DomainError("pair (" + std::to_string(k - 1) + "," + std::to_string(k) + ") not in series");
    return static_cast<std::size_t>(k - first_node);
  }
};

}  // namespace sirbass
