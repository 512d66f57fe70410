#include <catch_amalgamated.hpp>

#include <sirbass/config.hpp>
#include <sirbass/exact.hpp>
#include <sirbass/stochastic.hpp>

#include "generators.hpp"

using namespace sirbass;

// Invariants of the exact solution over 100 random scenarios of every topology.
TEST_CASE("exact marginals conserve probability and move monotonically") {
  gen::Gen g(4242);
  for (int n = 0; n < 100; ++n) {
    const auto s = gen::scenario(g);
    const auto sol = solve(s);
    const auto& m = sol.marginals;
    INFO("scenario " << n << ": " << scenario_to_text(s));
    double cons = 0.0, up_s = 0.0, down_r = 0.0, outside = 0.0, pair_excess = 0.0;
    for (int k = m.first_node; k <= m.last_node(); ++k)
      for (std::size_t j = 0; j < m.times.size(); ++j) {
        const double S = m.s(k, j), I = m.i(k, j), R = m.r(k, j);
        cons = std::max(cons, std::abs(S + I + R - 1.0));
        outside = std::max({outside, -S, -I, -R, S - 1.0, R - 1.0});
        if (j > 0) {
          up_s = std::max(up_s, S - m.s(k, j - 1));
          down_r = std::max(down_r, m.r(k, j - 1) - R);
        }
        if (k > sol.pairs.first_node && k - sol.pairs.first_node < static_cast<int>(sol.pairs.ss.size())) {
          const double P = sol.pairs.ss[sol.pairs.index(k)][j];
          pair_excess = std::max(pair_excess, P - std::min(S, m.s(k - 1, j)));
        }
      }
    CHECK(cons <= 1e-8);
    CHECK(outside <= 1e-9);
    CHECK(up_s <= 1e-9);
    CHECK(down_r <= 1e-9);
    CHECK(pair_excess <= 1e-9);
  }
}

TEST_CASE("initial condition is reproduced at t = 0") {
  gen::Gen g(77);
  for (int n = 0; n < 100; ++n) {
    const auto s = gen::scenario(g);
    const auto m = solve(s).marginals;
    for (int k = m.first_node; k <= m.last_node(); ++k) {
      const auto v = s.initial(k);
      CHECK(std::abs(m.s(k, 0) - v.S) <= 1e-14);
      CHECK(std::abs(m.r(k, 0) - v.R) <= 1e-14);
    }
  }
}

TEST_CASE("simulated trajectories never leave the recovered state and respect order") {
  gen::Gen g(99);
  for (int n = 0; n < 100; ++n) {
    const auto s = gen::scenario(g);
    Rng rng(5, static_cast<std::uint64_t>(n));
    const auto tr = simulate_ct(s, rng);
    for (std::size_t i = 0; i < tr.infected_at.size(); ++i) {
      CHECK(tr.infected_at[i] <= tr.recovered_at[i]);
      CHECK(tr.infected_at[i] >= 0.0);
    }
  }
}

TEST_CASE("monte carlo frequencies sum to one") {
  gen::Gen g(8);
  for (int n = 0; n < 20; ++n) {
    const auto s = gen::scenario(g);
    SimulationConfig cfg;
    cfg.engine = Engine::continuous;
    cfg.replications = 200;
    const auto est = estimate_marginals(s, cfg);
    for (const auto& node : est.mean)
      for (const auto& v : node) CHECK(std::abs(v[0] + v[1] + v[2] - 1.0) <= 1e-12);
  }
}
