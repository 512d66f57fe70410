#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace sirbass {

// Classical fourth-order Runge-Kutta on a flat state vector.
// The right-hand side is called as f(t, y, dydt).
class Rk4 {
public:
  explicit Rk4(std::size_t n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

  // The last stage is evaluated at t_last (normally t + h).
  template <class F>
  void step(F& f, double t, double h, std::vector<double>& y, double t_last) {
    const std::size_t n = y.size();
    f(t, y, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
    f(t + 0.5 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
    f(t + 0.5 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
    f(t_last, tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1_[i] + 2.0 * (k2_[i] + k3_[i]) + k4_[i]);
  }

  template <class F>
  void step(F& f, double t, double h, std::vector<double>& y) { step(f, t, h, y, t + h); }

  // Equal substeps no longer than h from t0 to t1. Coefficients are sampled
  // from inside [t0, t1), so a jump at t1 is not seen by the final stage.
  template <class F>
  void advance(F& f, double t0, double t1, double h, std::vector<double>& y) {
    if (!(t1 > t0)) return;
    const auto n = static_cast<long>(std::max(1.0, std::ceil((t1 - t0) / h - 1e-9)));
    const double dt = (t1 - t0) / static_cast<double>(n);
    for (long j = 0; j + 1 < n; ++j) step(f, t0 + j * dt, dt, y);
    step(f, t0 + (n - 1) * dt, dt, y, std::nextafter(t1, t0));
  }

private:
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

// Integrates through sorted output times, stopping exactly at each breakpoint
// so that discontinuous coefficients never fall inside a step.
// on_output(j, y) fires at outputs[j]; on_break(t, y) fires at each break, before
// any output at the same time.
template <class F, class Out, class Brk>
void integrate_on_grid(F& f, std::vector<double>& y, const std::vector<double>& outputs,
                       const std::vector<double>& breaks, double h, Out&& on_output, Brk&& on_break) {
  Rk4 rk(y.size());
  double t = 0.0;
  std::size_t b = 0;
  for (std::size_t j = 0; j < outputs.size(); ++j) {
    const double target = outputs[j];
    while (b < breaks.size() && breaks[b] <= target) {
      rk.advance(f, t, breaks[b], h, y);
      t = std::max(t, breaks[b]);
      on_break(breaks[b], y);
      ++b;
    }
    if (target > t) {
      rk.advance(f, t, target, h, y);
      t = target;
    }
    on_output(j, y);
  }
}

}  // namespace sirbass
