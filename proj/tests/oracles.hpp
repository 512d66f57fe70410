#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's solvers or closed forms.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include <sirbass/model.hpp>

namespace oracle {

using State = std::vector<double>;

// e^{-z} sum_{l<k} z^l / l! by direct term summation.
inline double poisson_cdf_naive(long k, double z) {
  double term = std::exp(-z), acc = 0.0;
  for (long l = 0; l < k; ++l) {
    acc += term;
    term *= z / static_cast<double>(l + 1);
  }
  return acc;
}

// Dormand-Prince with tight tolerances between a and b.
template <class F>
void dopri(F&& f, State& y, double a, double b, double tol = 1e-12) {
  if (b <= a) return;
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<State>());
  ode::integrate_adaptive(stepper, f, y, a, b, (b - a) / 100.0);
}

// Kolmogorov forward equation over all 3^K joint states of a finite line.
// Returns marginals [node][time][state], P(S_{k-1} S_k) as pair_ss[k][time]
// and P(R_{k-1} S_k) as pair_sr[k][time].
struct MasterResult {
  std::vector<std::vector<std::array<double, 3>>> marg;
  std::vector<std::vector<double>> pair_ss, pair_sr;
};

inline MasterResult master_equation(const sirbass::Scenario& s, const std::vector<double>& times) {
  const int K = s.lattice.size;
  std::size_t N = 1;
  for (int i = 0; i < K; ++i) N *= 3;
  std::vector<std::vector<int>> digits(N, std::vector<int>(static_cast<std::size_t>(K)));
  for (std::size_t x = 0; x < N; ++x) {
    std::size_t v = x;
    for (int i = 0; i < K; ++i) {
      digits[x][static_cast<std::size_t>(i)] = static_cast<int>(v % 3);
      v /= 3;
    }
  }
  std::vector<std::size_t> pow3(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) pow3[static_cast<std::size_t>(i)] = i == 0 ? 1 : pow3[static_cast<std::size_t>(i - 1)] * 3;
  const bool two = s.two_sided();

  auto rhs = [&](const State& P, State& dP, double t) {
    std::fill(dP.begin(), dP.end(), 0.0);
    std::vector<sirbass::Rates> rt;
    for (int k = 0; k < K; ++k) rt.push_back(s.rates(k, t));
    for (std::size_t x = 0; x < N; ++x) {
      if (P[x] == 0.0) continue;
      const auto& d = digits[x];
      for (int i = 0; i < K; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        double rate = 0.0;
        if (d[ui] == 0) {
          rate = rt[ui].p;
          if (i > 0 && d[ui - 1] == 1) rate += rt[ui].q_left;
          if (two && i + 1 < K && d[ui + 1] == 1) rate += rt[ui].q_right;
        } else if (d[ui] == 1) {
          rate = rt[ui].r;
        }
        if (rate == 0.0) continue;
        const double flow = rate * P[x];
        dP[x] -= flow;
        dP[x + pow3[ui]] += flow;
      }
    }
  };

  State P(N, 1.0);
  for (std::size_t x = 0; x < N; ++x)
    for (int i = 0; i < K; ++i) {
      const auto v = s.initial(i);
      const int di = digits[x][static_cast<std::size_t>(i)];
      P[x] *= di == 0 ? v.S : (di == 1 ? v.I : v.R);
    }

  std::vector<double> cuts;
  for (const auto* d : {&s.params.p, &s.params.q_left, &s.params.q_right, &s.params.r})
    for (double b : sirbass::time_breaks(d->time, times.back())) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  MasterResult res;
  res.marg.assign(static_cast<std::size_t>(K), std::vector<std::array<double, 3>>(times.size()));
  res.pair_ss.assign(static_cast<std::size_t>(K), std::vector<double>(times.size(), 0.0));
  res.pair_sr = res.pair_ss;
  double t = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    for (double c : cuts)
      if (c > t && c < times[j]) {
        dopri(rhs, P, t, c);
        t = c;
      }
    dopri(rhs, P, t, times[j]);
    t = times[j];
    for (std::size_t x = 0; x < N; ++x)
      for (int i = 0; i < K; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        res.marg[ui][j][static_cast<std::size_t>(digits[x][ui])] += P[x];
        if (i > 0 && digits[x][ui] == 0 && digits[x][ui - 1] == 0) res.pair_ss[ui][j] += P[x];
        if (i > 0 && digits[x][ui] == 0 && digits[x][ui - 1] == 2) res.pair_sr[ui][j] += P[x];
      }
  }
  return res;
}

// Aggregate SIR-Bass with constant rates: S' = -S(p + qI), I' = S(p + qI) - rI.
inline std::array<double, 3> aggregate(double S0, double I0, double R0, double p, double q, double r, double t) {
  State y{S0, I0, R0};
  dopri([&](const State& Y, State& d, double) {
    const double inf = Y[0] * (p + q * Y[1]);
    d[0] = -inf;
    d[1] = inf - r * Y[1];
    d[2] = r * Y[1];
  }, y, 0.0, t);
  return {y[0], y[1], y[2]};
}

}  // namespace oracle
