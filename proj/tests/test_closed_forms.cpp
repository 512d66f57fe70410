#include <catch_amalgamated.hpp>

#include <sirbass/closed_forms.hpp>

#include "generators.hpp"
#include "oracles.hpp"

using namespace sirbass;
using namespace sirbass::closed;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Scenario point_source_line(int K, const Descriptor& p0, double q, double r) {
  Scenario s;
  s.lattice.topology = Topology::finite_line;
  s.lattice.size = K;
  s.lattice.window_last = K - 1;
  TableSpace tab{0, std::vector<double>(static_cast<std::size_t>(K), 0.0)};
  tab.values[0] = std::get<ConstantSpace>(p0.space).value;
  s.params.p = Descriptor{tab, p0.time};
  s.params.q_left = q;
  s.params.r = r;
  s.horizon = 3.0;
  return s;
}

Scenario patient_zero_line(int K, double p, double q, double r) {
  Scenario s;
  s.lattice.topology = Topology::finite_line;
  s.lattice.size = K;
  s.lattice.window_last = K - 1;
  s.params.p = p;
  s.params.q_left = q;
  s.params.r = r;
  s.init.overrides[0] = {0.0, 1.0, 0.0};
  s.horizon = 3.0;
  return s;
}

}  // namespace

// ---- Bass ------------------------------------------------------------------------

TEST_CASE("bass_formula special values") {
  CHECK(bass_formula(0.4, 1.3, 0.0) == 0.0);
  CHECK_THAT(bass_formula(0.7, 0.0, 2.0), WithinRel(1.0 - std::exp(-1.4), 1e-14));
  CHECK_THAT(bass_formula(1.0, 1.0, 1.0), WithinRel(std::tanh(1.0), 1e-15));
  CHECK_THAT(bass_formula(1.0, 1.0, 1.0), WithinAbs(0.76159415595576, 1e-14));
  for (double c : {0.3, 1.0, 2.5})
    for (double t : {0.1, 1.0, 3.0}) CHECK_THAT(bass_formula(c, c, t), WithinRel(std::tanh(c * t), 1e-13));
  CHECK_THROWS_AS(bass_formula(0.0, 1.0, 1.0), DomainError);
}

TEST_CASE("homogeneous Bass with S0 = 1 and constant rates") {
  const double p = 0.3, q = 2.0;
  for (double t : {0.0, 0.5, 1.0, 4.0})
    CHECK_THAT(homogeneous_bass(1.0, p, q, t), WithinRel(std::exp(-(p + q) * t + q * (1 - std::exp(-p * t)) / p), 1e-14));
  CHECK(homogeneous_bass(1.0, 0.0, 2.0, 3.0) == 1.0);
}

TEST_CASE("homogeneous Bass is continuous in p at the p = 0 branch") {
  // the gap is first order in p: f(p) - f(0) = p f'(0) + O(p^2)
  const double S0 = 0.5, q = 2.0, t = 1.0;
  const double f0 = homogeneous_bass(S0, 0.0, q, t);
  const double slope = f0 * (-t - q * S0 * t * t / 2);
  for (double p : {1e-6, 1e-8}) {
    const double gap = homogeneous_bass(S0, p, q, t) - f0;
    CHECK_THAT(gap, WithinAbs(p * slope, 1e-3 * p * std::abs(slope)));
  }
  CHECK_THAT(homogeneous_bass(S0, 1e-9, q, t), WithinAbs(f0, 1e-8));
  // across the branch switch
  CHECK_THAT(homogeneous_bass(S0, 2 * kSmallRate, q, t), WithinAbs(homogeneous_bass(S0, 0.5 * kSmallRate, q, t), 1e-11));
}

TEST_CASE("homogeneous Bass with time-dependent rates matches quadrature of its definition") {
  const Descriptor p{ConstantSpace{0.4}, PiecewiseTime{{0.5, 1.5}, {1.0, 2.0, 0.5}}};
  const Descriptor q{ConstantSpace{1.5}, ExponentialTime{1.0, 0.3}};
  const double S0 = 0.8, t = 2.5;
  // exposure = int_0^t q(s) e^{-int_0^s p} ds by brute force
  double exposure = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) * t / n;
    exposure += q(0, 0, s) * std::exp(-p.integral(0, 0, s)) * t / n;
  }
  const double expect = S0 * std::exp(-p.integral(0, 0, t) - q.integral(0, 0, t) + S0 * exposure);
  CHECK_THAT(homogeneous_bass(S0, p, q, t), WithinRel(expect, 1e-9));
  CHECK_THROWS_AS(homogeneous_bass(S0, Descriptor{AffineSpace{1, 1, {}}}, q, t), DomainError);
}

TEST_CASE("patient-zero Bass single-term and far-field limits") {
  const double p = 1.0, q = 1.0;
  for (double t : {0.2, 1.0, 3.0}) CHECK_THAT(patient_zero_bass(p, q, 1, t), WithinRel(std::exp(-(p + q) * t), 1e-14));
  CHECK_THAT(patient_zero_bass(1.0, 1.0, 200, 1.0), WithinAbs(homogeneous_bass(1.0, 1.0, 1.0, 1.0), 1e-12));
  CHECK_THROWS_AS(patient_zero_bass(p, q, 0, 1.0), DomainError);
}

TEST_CASE("incomplete-gamma evaluation equals term summation and stays finite") {
  for (double p : {0.0, 0.3, 2.0})
    for (double q : {0.5, 1.0, 4.0})
      for (double t : {0.1, 1.0, 5.0})
        for (long k = 1; k <= 20; ++k) {
          const double z = q * (p > 0 ? (1 - std::exp(-p * t)) / p : t);
          const double naive = std::exp(-p * t) * oracle::poisson_cdf_naive(k, z) * std::exp(-q * t + z);
          CHECK_THAT(patient_zero_bass(p, q, k, t), WithinAbs(naive, 1e-12));
        }
  const double big = patient_zero_bass(0.5, 3.0, 10000, 2000.0);
  CHECK(std::isfinite(big));
  CHECK(big >= 0.0);
  CHECK(std::isfinite(patient_zero_sir(3.0, 1.0, 10000, 2000.0)));
}

TEST_CASE("p -> 0 patient-zero branch is the Poisson distribution function") {
  const double q = 1.3;
  for (long k : {1, 2, 5, 12})
    for (double t : {0.5, 2.0, 7.0})
      CHECK_THAT(patient_zero_bass(0.0, q, k, t), WithinAbs(oracle::poisson_cdf_naive(k, q * t), 1e-13));
}

TEST_CASE("patient-zero Bass is monotone in k and t") {
  for (double t : {0.3, 1.0, 2.5})
    for (long k = 1; k < 40; ++k) CHECK(patient_zero_bass(0.7, 1.2, k + 1, t) >= patient_zero_bass(0.7, 1.2, k, t));
  for (long k : {1, 3, 9})
    for (double t = 0.0; t < 5.0; t += 0.25)
      CHECK(patient_zero_bass(0.7, 1.2, k, t + 0.25) <= patient_zero_bass(0.7, 1.2, k, t));
}

TEST_CASE("patient-zero Bass matches the master equation of a short line") {
  const auto s = patient_zero_line(6, 0.6, 1.4, 0.0);
  const std::vector<double> times{0.5, 1.0, 2.0};
  const auto m = oracle::master_equation(s, times);
  for (std::size_t j = 0; j < times.size(); ++j)
    for (long k = 1; k < 6; ++k)
      CHECK_THAT(patient_zero_bass(0.6, 1.4, k, times[j]), WithinAbs(m.marg[static_cast<std::size_t>(k)][j][0], 1e-9));
}

TEST_CASE("expected infected count") {
  const double p = 0.5, q = 1.5, t = 1.2;
  const double z = q * (1 - std::exp(-p * t)) / p;
  for (long K : {1, 4, 15}) {
    double sum = 0.0, literal = 0.0;
    for (long k = 1; k <= K; ++k) sum += 1.0 - patient_zero_bass(p, q, k, t);
    for (long l = 1; l <= K; ++l) literal += l * std::pow(z, K - l) / std::tgamma(K - l + 1.0);
    literal = K - std::exp(-(p + q) * t) * literal;
    CHECK_THAT(expected_infected_bass(p, q, K, t), WithinAbs(sum, 1e-12));
    CHECK_THAT(expected_infected_bass(p, q, K, t), WithinAbs(literal, 1e-12));
  }
}

TEST_CASE("two-sided patient zero at node 0 of a half line") {
  const double p = 1.0, qL = 1.0, qR = 1.0;
  // one-sided contagion from the left only when the right rate vanishes
  for (long k : {1, 2, 6})
    CHECK_THAT(patient_zero_two_sided_bass(p, qL, 0.0, k, 1.0), WithinRel(patient_zero_bass(p, qL, k, 1.0), 1e-13));
  // the master equation of a two-sided line that is long enough on the right
  Scenario s = patient_zero_line(7, p, qL, 0.0);
  s.lattice.sidedness = Sidedness::two_sided;
  s.params.q_right = qR;
  const auto m = oracle::master_equation(s, {0.5, 1.0});
  // node 2 at t <= 1: dependence on nodes beyond 6 is below the tolerance
  CHECK_THAT(patient_zero_two_sided_bass(p, qL, qR, 2, 1.0), WithinAbs(m.marg[2][1][0], 1e-4));
  CHECK_THAT(patient_zero_two_sided_bass(p, qL, qR, 1, 0.5), WithinAbs(m.marg[1][0][0], 1e-5));
}

// ---- point sources ----------------------------------------------------------------

TEST_CASE("point source: zero source leaves everyone susceptible") {
  for (long k : {0, 1, 5}) CHECK(point_source_bass(Descriptor{0.0}, 1.0, k, 2.0) == 1.0);
}

TEST_CASE("point source matches the master equation of a short line") {
  const Descriptor p0{ConstantSpace{1.2}, ExponentialTime{1.0, 0.8}};
  for (double r : {0.0, 0.7}) {
    const auto s = point_source_line(5, p0, 1.5, r);
    const std::vector<double> times{0.4, 1.0, 3.0};
    const auto m = oracle::master_equation(s, times);
    for (std::size_t j = 0; j < times.size(); ++j)
      for (long k = 0; k < 5; ++k)
        CHECK_THAT(point_source_sir(p0, 1.5, r, k, times[j]), WithinAbs(m.marg[static_cast<std::size_t>(k)][j][0], 1e-8));
  }
}

TEST_CASE("point source: far nodes are unaffected in finite time") {
  const Descriptor p0{1.0};
  CHECK(point_source_bass(p0, 1.0, 60, 2.0) > 1.0 - 1e-12);
  CHECK(point_source_sir(p0, 1.0, 0.5, 60, 2.0) > 1.0 - 1e-12);
}

TEST_CASE("point source long-time limits") {
  const Descriptor decaying{ConstantSpace{1.0}, ExponentialTime{1.0, 1.0}};
  CHECK_THAT(point_source_bass_limit(decaying), WithinAbs(std::exp(-1.0), 1e-15));
  CHECK_THAT(point_source_bass(decaying, 1.0, 1, 50.0), WithinAbs(std::exp(-1.0), 1e-3));
  CHECK_THAT(point_source_bass(Descriptor{1.0}, 1.0, 1, 50.0), WithinAbs(0.0, 1e-3));
  const double q = 2.0, r = 1.0;
  const double l1 = point_source_sir_limit(decaying, q, r, 1), l2 = point_source_sir_limit(decaying, q, r, 2);
  CHECK_THAT((1 - l2) / (1 - l1), WithinRel(2.0 / 3.0, 1e-14));
}

TEST_CASE("point source with r = 0 equals the Bass point source") {
  const Descriptor p0{ConstantSpace{0.9}, PiecewiseTime{{0.7}, {1.0, 0.2}}};
  for (long k : {0, 1, 4, 9})
    for (double t : {0.3, 1.0, 2.5}) CHECK_THAT(point_source_sir(p0, 1.3, 0.0, k, t), WithinAbs(point_source_bass(p0, 1.3, k, t), 1e-12));
}

// ---- SIR ------------------------------------------------------------------------------

TEST_CASE("homogeneous SIR-Bass with r = 0 and R0 = 0 is homogeneous Bass") {
  for (double t : {0.2, 1.0, 3.0}) {
    const auto v = homogeneous_sir_bass(0.7, 0.0, 0.4, 1.8, 0.0, t);
    CHECK_THAT(v.S, WithinAbs(homogeneous_bass(0.7, 0.4, 1.8, t), 1e-13));
    CHECK_THAT(v.R, WithinAbs(0.0, 1e-15));
  }
}

TEST_CASE("homogeneous SIR-Bass p -> 0 branch is continuous") {
  const double S0 = 0.6, R0 = 0.1, q = 2.0, r = 0.7;
  for (double t : {0.5, 2.0, 6.0}) {
    const auto a = homogeneous_sir_bass(S0, R0, 0.0, q, r, t);
    const auto b = homogeneous_sir_bass(S0, R0, 1e-7, q, r, t);
    CHECK_THAT(a.S, WithinAbs(b.S, 1e-6));
    CHECK_THAT(a.R, WithinAbs(b.R, 1e-6));
  }
}

TEST_CASE("homogeneous SIR without source tends to the final state") {
  const double S0 = 0.5, I0 = 0.5, R0 = 0.0, q = 2.0, r = 1.0;
  const auto fin = sir_final_state(S0, I0, R0, q, r);
  CHECK_THAT(fin.S, WithinAbs(0.25, 1e-15));
  const double T = 20.0 / std::min(r, r + q * (1 - S0));
  const auto v = homogeneous_sir_bass(S0, R0, 0.0, q, r, T);
  CHECK_THAT(v.S, WithinAbs(fin.S, 1e-8));
  CHECK_THAT(v.R, WithinAbs(fin.R, 1e-8));
  CHECK_THAT(sir_final_state(1.0, 0.0, 0.0, 3.0, 1.0).S, WithinAbs(1.0, 1e-15));
}

TEST_CASE("outbreak threshold is strict") {
  CHECK_FALSE(outbreak_threshold(1.0, 1.0));
  CHECK(outbreak_threshold(1.1, 1.0));
  CHECK_FALSE(outbreak_threshold(0.5, 1.0));
}

TEST_CASE("patient-zero SIR against term summation") {
  for (double q : {0.5, 2.0})
    for (double r : {0.0, 0.3, 1.5})
      for (double t : {0.3, 2.0, 8.0})
        for (long k = 1; k <= 20; ++k) {
          const double rho = q / (q + r);
          const double expect = 1.0 - std::pow(rho, k) * (1.0 - oracle::poisson_cdf_naive(k, (q + r) * t));
          CHECK_THAT(patient_zero_sir(q, r, k, t), WithinAbs(expect, 1e-12));
        }
}

TEST_CASE("patient-zero SIR limits") {
  // r = 0 is the SI case
  for (long k : {1, 3, 8}) CHECK_THAT(patient_zero_sir(1.5, 0.0, k, 2.0), WithinAbs(patient_zero_bass(0.0, 1.5, k, 2.0), 1e-14));
  const double q = 2.0, r = 1.0;
  for (long k : {1, 2, 5}) CHECK_THAT(patient_zero_sir(q, r, k, 60.0 / (q + r)), WithinAbs(1 - std::pow(q / (q + r), k), 1e-9));
  CHECK(patient_zero_sir(q, r, 80, 3.0) > 1 - 1e-12);
}

TEST_CASE("patient-zero SIR matches the master equation of a short line") {
  const auto s = patient_zero_line(6, 0.0, 1.7, 0.6);
  const std::vector<double> times{0.5, 1.5, 3.0};
  const auto m = oracle::master_equation(s, times);
  for (std::size_t j = 0; j < times.size(); ++j)
    for (long k = 1; k < 6; ++k)
      CHECK_THAT(patient_zero_sir(1.7, 0.6, k, times[j]), WithinAbs(m.marg[static_cast<std::size_t>(k)][j][0], 1e-9));
}

TEST_CASE("expected susceptible count equals the node sum") {
  for (double r : {0.0, 0.4, 2.0})
    for (long K : {1, 5, 12}) {
      double sum = 0.0;
      for (long k = 1; k <= K; ++k) sum += patient_zero_sir(1.3, r, k, 1.7);
      CHECK_THAT(expected_susceptible_sir(1.3, r, K, 1.7), WithinAbs(sum, 1e-11));
    }
}

TEST_CASE("literal transcription of the expected-susceptible series is off") {
  // K - (q/r)(1 - rho^K) - ((q+r)/r) e^{-(q+r)t} sum_l (qt)^{K-l}/(K-l)! (1 - rho^{l+1})
  // as typeset disagrees with the node sum; the corrected series is in expected_susceptible_sir.
  const double q = 1.0, r = 0.5, t = 1.0;
  const long K = 5;
  const double rho = q / (q + r);
  double series = 0.0;
  for (long l = 1; l <= K; ++l) series += std::pow(q * t, K - l) / std::tgamma(K - l + 1.0) * (1 - std::pow(rho, l + 1));
  const double literal = K - (q / r) * (1 - std::pow(rho, K)) - ((q + r) / r) * std::exp(-(q + r) * t) * series;
  double sum = 0.0;
  for (long k = 1; k <= K; ++k) sum += patient_zero_sir(q, r, k, t);
  CHECK(std::abs(literal - sum) > 0.5);
  CHECK_THAT(expected_susceptible_sir(q, r, K, t), WithinAbs(sum, 1e-12));
}

TEST_CASE("closed forms stay in [0, 1] and decrease in time on random parameters") {
  gen::Gen g(5);
  for (int n = 0; n < 100; ++n) {
    const double p = g.coin(0.2) ? 0.0 : g.uni(0.01, 2.0), q = g.uni(0.1, 3.0), r = g.uni(0.0, 2.0);
    const double S0 = g.uni(0.0, 1.0), R0 = g.uni(0.0, 1.0 - S0);
    const long k = g.integer(1, 25);
    double prev[5] = {2, 2, 2, 2, 2};
    for (double t = 0.0; t <= 4.0; t += 0.5) {
      const double v[5] = {homogeneous_bass(S0, p, q, t), patient_zero_bass(p, q, k, t),
                           homogeneous_sir_bass(S0, R0, p, q, r, t).S, patient_zero_sir(q, r, k, t),
                           point_source_sir(Descriptor{p}, q, r, k, t)};
      for (int i = 0; i < 5; ++i) {
        CHECK((v[i] >= 0.0 && v[i] <= 1.0));
        CHECK(v[i] <= prev[i] + 1e-12);
        prev[i] = v[i];
      }
    }
  }
}
