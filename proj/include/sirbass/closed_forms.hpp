#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "descriptor.hpp"
#include "special.hpp"

namespace sirbass::closed {

// Rates below this use the analytic zero-rate branch.
inline constexpr double kSmallRate = 1e-12;

// (1 - e^{-pt}) / p with its p -> 0 limit t.
inline double source_factor(double p, double t) { return p < kSmallRate ? t : -std::expm1(-p * t) / p; }

// Aggregate Bass adoption curve I(t) for I(0) = 0.
inline double bass_formula(double p, double q, double t) {
  if (!(p > 0.0)) throw DomainError("bass_formula needs p > 0");
  const double e = std::exp(-(p + q) * t);
  return -std::expm1(-(p + q) * t) / (1.0 + (q / p) * e);
}

// Homogeneous one-sided Bass with constant rates.
inline double homogeneous_bass(double S0, double p, double q, double t) {
  if (S0 <= 0.0) return 0.0;
  return S0 * std::exp(-(p + q) * t + q * S0 * source_factor(p, t));
}

namespace detail {

// Segment boundaries of [0, t] on which both temporal parts are smooth.
inline std::vector<double> smooth_segments(const TemporalPart& a, const TemporalPart& b, double t) {
  std::vector<double> cuts{0.0};
  for (double x : time_breaks(a, t)) cuts.push_back(x);
  for (double x : time_breaks(b, t)) cuts.push_back(x);
  cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

// Spatially constant descriptor -> amplitude; throws for spatial variation.
inline double amplitude(const Descriptor& d) {
  if (auto c = std::get_if<ConstantSpace>(&d.space)) return c->value;
  throw DomainError("homogeneous formula needs a spatially constant descriptor");
}

}  // namespace detail

// int_0^t q(s) e^{-int_0^s p} ds for spatially constant descriptors.
inline double contagion_exposure(const Descriptor& p, const Descriptor& q, double t) {
  const double pa = detail::amplitude(p), qa = detail::amplitude(q);
  if (qa == 0.0 || t <= 0.0) return 0.0;
  const auto cuts = detail::smooth_segments(p.time, q.time, t);
  const bool analytic = !std::holds_alternative<ExponentialTime>(p.time) &&
                        !std::holds_alternative<ExponentialTime>(q.time);
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double a = cuts[j], b = cuts[j + 1];
    const double Ea = std::exp(-p.integral(0, 0.0, a));
    if (analytic) {
      const double mid = 0.5 * (a + b);
      acc += qa * time_value(q.time, mid) * Ea * source_factor(pa * time_value(p.time, mid), b - a);
    } else {
      acc += special::integrate(
          [&](double s) { return q(0, 0.0, s) * std::exp(-p.integral(0, 0.0, s)); }, a, b);
    }
  }
  return acc;
}

// Homogeneous one-sided Bass with time-dependent p(t), q(t).
inline double homogeneous_bass(double S0, const Descriptor& p, const Descriptor& q, double t) {
  if (S0 <= 0.0) return 0.0;
  return S0 * std::exp(-p.integral(0, 0.0, t) - q.integral(0, 0.0, t) + S0 * contagion_exposure(p, q, t));
}

// Patient zero at node 0 of a semi-infinite one-sided Bass line; k >= 1.
inline double patient_zero_bass(double p, double q, long k, double t) {
  if (k < 1) throw DomainError("patient_zero_bass: node 0 is patient zero, need k >= 1");
  const double z = q * source_factor(p, t);
  const double Q = special::poisson_cdf_below(k, z);
  if (Q <= 0.0) return 0.0;
  return std::exp(-(p + q) * t + z + std::log(Q));
}

// Expected number of infected nodes among 1..K for the patient-zero Bass line.
inline double expected_infected_bass(double p, double q, long K, double t) {
  if (K < 1) return 0.0;
  const double z = q * source_factor(p, t);
  const double base = -(p + q) * t + z;
  // sum_{k=1}^K S_k = e^{base} (K Q(K, z) - z Q(K-1, z))
  const double a = K * special::poisson_cdf_below(K, z);
  const double b = z * special::poisson_cdf_below(K - 1, z);
  return static_cast<double>(K) - std::exp(base) * (a - b);
}

// Two-sided patient zero on a semi-infinite Bass line; k >= 1.
inline double patient_zero_two_sided_bass(double p, double qL, double qR, long k, double t) {
  if (k < 1) throw DomainError("patient_zero_two_sided_bass: need k >= 1");
  const double g = source_factor(p, t);
  const double Q = special::poisson_cdf_below(k, qL * g);
  if (Q <= 0.0) return 0.0;
  return std::exp(-(p + qL + qR) * t + qR * g + qL * g + std::log(Q));
}

// ---- point sources -------------------------------------------------------

namespace detail {

// 1 - int_0^t K(tau) (1 - e^{-P0(t - tau)}) dtau with the Erlang-type kernel
// (q tau)^{k-1} q e^{-(q+r) tau} / (k-1)!.
inline double point_source(const Descriptor& p0, double q, double r, long k, double t) {
  if (k == 0) return std::exp(-p0.integral(0, 0.0, t));
  if (k < 0) throw DomainError("point source needs k >= 0");
  if (!(q > 0.0)) throw DomainError("point source needs q > 0");
  if (t <= 0.0) return 1.0;
  const double lk = static_cast<double>(k);
  const double log_ratio = std::log(q / (q + r));
  auto f = [&](double tau) {
    const double lker = special::log_erlang_density(k, q + r, tau) + lk * log_ratio;
    const double miss = -std::expm1(-p0.integral(0, 0.0, t - tau));
    return lker < -745.0 ? 0.0 : std::exp(lker) * miss;
  };
  const double peak = (lk - 1.0) / (q + r);
  const double width = std::sqrt(std::max(lk, 1.0)) / (q + r);
  std::vector<double> cuts{0.0};
  for (double c : {peak - 8 * width, peak, peak + 8 * width})
    if (c > cuts.back() && c < t) cuts.push_back(c);
  cuts.push_back(t);
  for (double b : time_breaks(p0.time, t))
    if (t - b > 0.0) cuts.push_back(t - b);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) acc += special::integrate(f, cuts[j], cuts[j + 1], 1e-12);
  return std::clamp(1.0 - acc, 0.0, 1.0);
}

}  // namespace detail

// Point source p0(t) at node 0 of an all-susceptible semi-infinite Bass line.
inline double point_source_bass(const Descriptor& p0, double q, long k, double t) {
  return detail::point_source(p0, q, 0.0, k, t);
}

inline double point_source_sir(const Descriptor& p0, double q, double r, long k, double t) {
  return detail::point_source(p0, q, r, k, t);
}

// t -> infinity limits of the point-source solutions.
inline double point_source_bass_limit(const Descriptor& p0) {
  return std::exp(-detail::amplitude(p0) * time_integral_total(p0.time));
}

inline double point_source_sir_limit(const Descriptor& p0, double q, double r, long k) {
  const double miss = -std::expm1(-detail::amplitude(p0) * time_integral_total(p0.time));
  return 1.0 - std::pow(q / (q + r), static_cast<double>(k)) * miss;
}

// ---- SIR-Bass ------------------------------------------------------------

struct SR {
  double S = 0.0;
  double R = 0.0;
};

struct FinalState {
  double S = 0.0, I = 0.0, R = 0.0;
};

inline bool outbreak_threshold(double q, double r) { return q > r; }

inline FinalState sir_final_state(double S0, double I0, double R0, double q, double r) {
  (void)I0;
  const double c = r + q * (1.0 - S0);
  const double S = c > 0.0 ? S0 * (r + q * R0) / c : S0;
  return {S, 0.0, 1.0 - S};
}

namespace detail {

// Closed form for p = 0 (classical SIR on the one-sided lattice).
inline SR homogeneous_sir_no_source(double S0, double R0, double q, double r, double t) {
  const double I0 = std::max(0.0, 1.0 - S0 - R0);
  const double c = r + q * (1.0 - S0);
  if (!(c > 0.0)) return {S0, R0};
  const double S_inf = S0 * (r + q * R0) / c;
  const double D = q * S0 * I0 / c;
  const double S = S_inf + D * std::exp(-c * t);
  // r int_0^t e^{-r(t-tau)} D e^{-c tau} dtau
  const double gap = c - r;  // = q (1 - S0)
  const double conv = std::abs(gap * t) < 1e-12 ? r * D * t * std::exp(-r * t)
                                                 : r * D * std::exp(-r * t) * (-std::expm1(-gap * t)) / gap;
  const double R = 1.0 - (1.0 - R0) * std::exp(-r * t) - S_inf * (-std::expm1(-r * t)) - conv;
  return {S, R};
}

inline double homogeneous_sir_S(double S0, double R0, double p, double q, double r, double t) {
  auto A = [&](double s) { return -(p + q + r) * s + q * S0 * source_factor(p, s); };
  const double At = A(t);
  double S = S0 * std::exp(At);
  const double src = r + q * R0;
  if (src > 0.0 && t > 0.0)
    S += S0 * src * special::integrate([&](double tau) { return std::exp(At - A(tau) - p * tau); }, 0.0, t);
  return S;
}

}  // namespace detail

// Homogeneous one-sided SIR-Bass marginals [S](t), [R](t).
inline SR homogeneous_sir_bass(double S0, double R0, double p, double q, double r, double t) {
  if (p < kSmallRate) return detail::homogeneous_sir_no_source(S0, R0, q, r, t);
  const double S = detail::homogeneous_sir_S(S0, R0, p, q, r, t);
  double R = 1.0 - (1.0 - R0) * std::exp(-r * t);
  if (r > 0.0 && t > 0.0)
    R -= r * special::integrate(
                 [&](double tau) { return std::exp(-r * (t - tau)) * detail::homogeneous_sir_S(S0, R0, p, q, r, tau); },
                 0.0, t, 1e-12);
  return {S, R};
}

// Patient zero at node 0 of a semi-infinite SIR line (p = 0); k >= 1.
inline double patient_zero_sir(double q, double r, long k, double t) {
  if (k < 1) throw DomainError("patient_zero_sir: node 0 is patient zero, need k >= 1");
  const double rho = q / (q + r);
  return 1.0 - std::pow(rho, static_cast<double>(k)) * special::poisson_tail(k, (q + r) * t);
}

// Expected number of susceptible nodes among 1..K for the patient-zero SIR line.
inline double expected_susceptible_sir(double q, double r, long K, double t) {
  if (K < 1) return 0.0;
  if (r < kSmallRate) {
    double acc = 0.0;
    for (long k = 1; k <= K; ++k) acc += patient_zero_sir(q, r, k, t);
    return acc;
  }
  const double L = q + r, rho = q / L, qt = q * t;
  const double Kd = static_cast<double>(K);
  // e^{-Lt} (q/r) sum_{l=1}^K (qt)^{K-l}/(K-l)! (1 - rho^l), summed in log space
  double tail = 0.0;
  for (long l = 1; l <= K; ++l) {
    const double m = static_cast<double>(K - l);
    const double lt = -L * t + (m > 0 ? m * std::log(qt) : 0.0) - std::lgamma(m + 1.0);
    tail += std::exp(lt) * (-std::expm1(static_cast<double>(l) * std::log(rho)));
  }
  return Kd - (q / r) * (-std::expm1(Kd * std::log(rho))) + (q / r) * tail;
}

}  // namespace sirbass::closed
