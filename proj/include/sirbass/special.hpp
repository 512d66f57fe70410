#pragma once

#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace sirbass::special {

// e^{-z} * sum_{l=0}^{k-1} z^l / l!, i.e. P(Poisson(z) < k).
inline double poisson_cdf_below(long k, double z) {
  if (k <= 0) return 0.0;
  if (z <= 0.0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(k), z);
}

// P(Poisson(z) >= k).
inline double poisson_tail(long k, double z) {
  if (k <= 0) return 1.0;
  if (z <= 0.0) return 0.0;
  return boost::math::gamma_p(static_cast<double>(k), z);
}

// sum_{l=0}^{k-1} z^l / l! by plain term recursion; reference for small k.
inline double truncated_exp_sum(long k, double z) {
  double term = 1.0, acc = 0.0;
  for (long l = 0; l < k; ++l) {
    acc += term;
    term *= z / static_cast<double>(l + 1);
  }
  return acc;
}

// log of the Erlang(k, rate) density at tau.
inline double log_erlang_density(long k, double rate, double tau) {
  if (tau <= 0.0) return k == 1 ? std::log(rate) : -std::numeric_limits<double>::infinity();
  const double kd = static_cast<double>(k);
  return (kd - 1.0) * std::log(rate * tau) + std::log(rate) - rate * tau - std::lgamma(kd);
}

inline double normal_cdf(double z, double variance = 1.0) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0 * variance));
}

// Adaptive 15/31-point Gauss-Kronrod on [a, b]; rel_tol is relative to the L1 norm.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-12) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, rel_tol, &err);
}

}  // namespace sirbass::special
