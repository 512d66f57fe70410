#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sirbass {

// Thrown when a descriptor is evaluated outside the domain it describes.
class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---- spatial parts -------------------------------------------------------

struct ConstantSpace {
  double value = 0.0;
  bool operator==(const ConstantSpace&) const = default;
};

// intercept + slope * x, with x optionally clamped to [lo, hi] first.
struct AffineSpace {
  double intercept = 0.0;
  double slope = 0.0;
  std::optional<std::pair<double, double>> clamp;
  bool operator==(const AffineSpace&) const = default;
};

// values[j] belongs to node first_node + j.
struct TableSpace {
  int first_node = 0;
  std::vector<double> values;
  bool operator==(const TableSpace&) const = default;
};

using SpatialPart = std::variant<ConstantSpace, AffineSpace, TableSpace>;

inline double space_value(const SpatialPart& s, int k, double x) {
  if (auto c = std::get_if<ConstantSpace>(&s)) return c->value;
  if (auto a = std::get_if<AffineSpace>(&s)) {
    if (a->clamp) x = std::clamp(x, a->clamp->first, a->clamp->second);
    return a->intercept + a->slope * x;
  }
  const auto& t = std::get<TableSpace>(s);
  const long j = static_cast<long>(k) - t.first_node;
  if (j < 0 || j >= static_cast<long>(t.values.size()))
    throw DomainError("table descriptor has no entry for node " + std::to_string(k));
  return t.values[static_cast<std::size_t>(j)];
}

inline bool covers_node(const SpatialPart& s, int k) {
  const auto* t = std::get_if<TableSpace>(&s);
  return !t || (k >= t->first_node &&
                static_cast<long>(k) - t->first_node < static_cast<long>(t->values.size()));
}

// ---- temporal parts ------------------------------------------------------

struct Steady {
  bool operator==(const Steady&) const = default;
};

// values[0] on [0, breaks[0]), values[j] on [breaks[j-1], breaks[j]), last value after.
struct PiecewiseTime {
  std::vector<double> breaks;
  std::vector<double> values;
  bool operator==(const PiecewiseTime&) const = default;
};

// amplitude * exp(-rate * t)
struct ExponentialTime {
  double amplitude = 1.0;
  double rate = 0.0;
  bool operator==(const ExponentialTime&) const = default;
};

using TemporalPart = std::variant<Steady, PiecewiseTime, ExponentialTime>;

inline double time_value(const TemporalPart& tp, double t) {
  if (std::holds_alternative<Steady>(tp)) return 1.0;
  if (auto e = std::get_if<ExponentialTime>(&tp)) return e->amplitude * std::exp(-e->rate * t);
  const auto& pw = std::get<PiecewiseTime>(tp);
  auto it = std::upper_bound(pw.breaks.begin(), pw.breaks.end(), t);
  return pw.values[static_cast<std::size_t>(it - pw.breaks.begin())];
}

// (1 - e^{-a t}) / a, continuous at a = 0.
inline double expm1_ratio(double a, double t) {
  if (std::abs(a * t) < 1e-300 || a == 0.0) return t;
  return -std::expm1(-a * t) / a;
}

// Integral of the temporal factor over [0, t].
inline double time_integral(const TemporalPart& tp, double t) {
  if (std::holds_alternative<Steady>(tp)) return t;
  if (auto e = std::get_if<ExponentialTime>(&tp)) return e->amplitude * expm1_ratio(e->rate, t);
  const auto& pw = std::get<PiecewiseTime>(tp);
  double acc = 0.0, lo = 0.0;
  for (std::size_t j = 0; j < pw.values.size(); ++j) {
    const double hi = j < pw.breaks.size() ? pw.breaks[j] : std::numeric_limits<double>::infinity();
    if (hi <= 0.0) continue;
    const double a = std::max(lo, 0.0), b = std::min(hi, t);
    if (b > a) acc += pw.values[j] * (b - a);
    if (hi >= t) break;
    lo = hi;
  }
  return acc;
}

// Integral over [0, inf); infinite when the factor does not decay.
inline double time_integral_total(const TemporalPart& tp) {
  if (auto e = std::get_if<ExponentialTime>(&tp)) {
    if (e->amplitude == 0.0) return 0.0;
    return e->rate > 0.0 ? e->amplitude / e->rate : std::numeric_limits<double>::infinity();
  }
  if (auto pw = std::get_if<PiecewiseTime>(&tp)) {
    if (pw->values.back() == 0.0)
      return time_integral(tp, pw->breaks.empty() ? 0.0 : pw->breaks.back());
  }
  return std::numeric_limits<double>::infinity();
}

inline double time_sup(const TemporalPart& tp, double horizon) {
  if (std::holds_alternative<Steady>(tp)) return 1.0;
  if (auto e = std::get_if<ExponentialTime>(&tp))
    return std::max(e->amplitude, e->amplitude * std::exp(-e->rate * horizon));
  const auto& pw = std::get<PiecewiseTime>(tp);
  double m = pw.values[0];
  for (std::size_t j = 0; j < pw.breaks.size() && pw.breaks[j] <= horizon; ++j)
    m = std::max(m, pw.values[j + 1]);
  return m;
}

inline double time_inf(const TemporalPart& tp, double horizon) {
  if (std::holds_alternative<Steady>(tp)) return 1.0;
  if (auto e = std::get_if<ExponentialTime>(&tp))
    return std::min(e->amplitude, e->amplitude * std::exp(-e->rate * horizon));
  const auto& pw = std::get<PiecewiseTime>(tp);
  double m = pw.values[0];
  for (std::size_t j = 0; j < pw.breaks.size() && pw.breaks[j] <= horizon; ++j)
    m = std::min(m, pw.values[j + 1]);
  return m;
}

// Derivative of the smooth part (jumps are reported by time_breaks).
inline double time_derivative(const TemporalPart& tp, double t) {
  if (auto e = std::get_if<ExponentialTime>(&tp)) return -e->rate * e->amplitude * std::exp(-e->rate * t);
  return 0.0;
}

// Jump locations in the open interval (0, horizon).
inline std::vector<double> time_breaks(const TemporalPart& tp, double horizon) {
  std::vector<double> out;
  if (auto pw = std::get_if<PiecewiseTime>(&tp))
    for (double b : pw->breaks)
      if (b > 0.0 && b < horizon) out.push_back(b);
  return out;
}

inline bool is_steady(const TemporalPart& tp) {
  if (std::holds_alternative<Steady>(tp)) return true;
  if (auto e = std::get_if<ExponentialTime>(&tp)) return e->rate == 0.0 && e->amplitude == 1.0;
  return false;
}

// ---- descriptor ----------------------------------------------------------

// A rate field f(k, x, t) = space(k, x) * time(t).
struct Descriptor {
  SpatialPart space = ConstantSpace{0.0};
  TemporalPart time = Steady{};

  Descriptor() = default;
  Descriptor(double c) : space(ConstantSpace{c}) {}  // NOLINT(google-explicit-constructor)
  Descriptor(SpatialPart s, TemporalPart t = Steady{}) : space(std::move(s)), time(std::move(t)) {}

  double spatial(int k, double x) const { return space_value(space, k, x); }
  double operator()(int k, double x, double t) const { return spatial(k, x) * time_value(time, t); }
  double integral(int k, double x, double t) const { return spatial(k, x) * time_integral(time, t); }
  double sup(int k, double x, double horizon) const {
    const double s = spatial(k, x);
    return s >= 0 ? s * time_sup(time, horizon) : s * time_inf(time, horizon);
  }
  double inf(int k, double x, double horizon) const {
    const double s = spatial(k, x);
    return s >= 0 ? s * time_inf(time, horizon) : s * time_sup(time, horizon);
  }
  double derivative(int k, double x, double t) const { return spatial(k, x) * time_derivative(time, t); }
  bool steady() const { return is_steady(time); }
  bool is_zero() const {
    auto c = std::get_if<ConstantSpace>(&space);
    return c && c->value == 0.0;
  }

  bool operator==(const Descriptor&) const = default;
};

}  // namespace sirbass
