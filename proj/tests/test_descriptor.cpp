#include <catch_amalgamated.hpp>

#include <sirbass/descriptor.hpp>

using namespace sirbass;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Midpoint rule on a fine grid, split at the breaks; independent of the closed-form integrals.
double midpoint(const TemporalPart& tp, double t, int n = 100000) {
  std::vector<double> cuts{0.0};
  for (double b : time_breaks(tp, t))
    if (b < t) cuts.push_back(b);
  cuts.push_back(t);
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double a = cuts[j], h = (cuts[j + 1] - a) / n;
    for (int i = 0; i < n; ++i) acc += time_value(tp, a + (i + 0.5) * h) * h;
  }
  return acc;
}

}  // namespace

TEST_CASE("constant descriptor evaluates to its value everywhere") {
  const Descriptor p{0.3};
  for (int k : {-5, 0, 7})
    for (double t : {0.0, 0.4, 12.0}) CHECK(p(k, 0.1 * k, t) == 0.3);
}

TEST_CASE("affine field q(x) = 5 + x at x = 2") {
  const Descriptor q{AffineSpace{5.0, 1.0, {}}};
  CHECK(q(0, 2.0, 0.0) == 7.0);
  CHECK(q(123, 2.0, 3.5) == 7.0);
}

TEST_CASE("affine clamp continues the field as a constant") {
  const Descriptor p{AffineSpace{1.0, -0.2, std::make_pair(0.0, 5.0)}};
  CHECK_THAT(p(0, -3.0, 0.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(p(0, 9.0, 0.0), WithinAbs(0.0, 1e-15));
  CHECK_THAT(p(0, 2.5, 0.0), WithinAbs(0.5, 1e-15));
}

TEST_CASE("piecewise temporal factor switches at the break") {
  const double t0 = 0.7;
  const Descriptor p{ConstantSpace{2.0}, PiecewiseTime{{t0}, {0.5, 1.5}}};
  CHECK(p(0, 0.0, std::nextafter(t0, 0.0)) == 1.0);
  CHECK(p(0, 0.0, t0) == 3.0);
  CHECK(p(0, 0.0, t0 + 1e-9) == 3.0);
  CHECK(time_breaks(p.time, 1.0) == std::vector<double>{t0});
  CHECK(time_breaks(p.time, 0.5).empty());
}

TEST_CASE("table descriptor refuses nodes it does not cover") {
  const Descriptor d{TableSpace{2, {1.0, 2.0, 3.0}}};
  CHECK(d(3, 0.0, 0.0) == 2.0);
  CHECK_THROWS_AS(d(1, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(d(5, 0.0, 0.0), DomainError);
  CHECK(covers_node(d.space, 4));
  CHECK_FALSE(covers_node(d.space, 5));
}

TEST_CASE("temporal integrals agree with midpoint quadrature") {
  const std::vector<TemporalPart> parts = {Steady{}, PiecewiseTime{{0.3, 1.1, 2.0}, {0.5, 2.0, 0.0, 1.3}},
                                           ExponentialTime{1.4, 0.7}, ExponentialTime{0.8, -0.25},
                                           ExponentialTime{1.0, 0.0}};
  for (const auto& tp : parts)
    for (double t : {0.0, 0.25, 1.1, 2.7}) CHECK_THAT(time_integral(tp, t), WithinAbs(midpoint(tp, t), 1e-9));
}

TEST_CASE("total integral of a decaying factor") {
  CHECK_THAT(time_integral_total(ExponentialTime{2.0, 0.5}), WithinRel(4.0, 1e-14));
  CHECK(std::isinf(time_integral_total(Steady{})));
  CHECK_THAT(time_integral_total(PiecewiseTime{{1.0, 3.0}, {2.0, 0.5, 0.0}}), WithinRel(3.0, 1e-14));
}

TEST_CASE("expm1_ratio is continuous at a = 0") {
  const double t = 1.7;
  CHECK(expm1_ratio(0.0, t) == t);
  CHECK_THAT(expm1_ratio(1e-14, t), WithinRel(t, 1e-12));
  CHECK_THAT(expm1_ratio(-1e-14, t), WithinRel(t, 1e-12));
  CHECK_THAT(expm1_ratio(2.0, t), WithinRel((1 - std::exp(-2 * t)) / 2, 1e-14));
}

TEST_CASE("sup and inf over the horizon") {
  const PiecewiseTime pw{{1.0, 2.0}, {0.5, 3.0, 1.0}};
  CHECK(time_sup(pw, 0.5) == 0.5);
  CHECK(time_sup(pw, 5.0) == 3.0);
  CHECK(time_inf(pw, 5.0) == 0.5);
  const ExponentialTime grow{1.0, -0.5};
  CHECK_THAT(time_sup(grow, 2.0), WithinRel(std::exp(1.0), 1e-14));
  CHECK(time_inf(grow, 2.0) == 1.0);
  const Descriptor neg{ConstantSpace{-1.0}, ExponentialTime{1.0, 1.0}};
  CHECK(neg.inf(0, 0.0, 1.0) == -1.0);
}

TEST_CASE("time derivative of the temporal parts") {
  CHECK(time_derivative(Steady{}, 1.0) == 0.0);
  CHECK(time_derivative(PiecewiseTime{{1.0}, {1.0, 2.0}}, 0.5) == 0.0);
  CHECK_THAT(time_derivative(ExponentialTime{2.0, 0.5}, 1.0), WithinRel(-1.0 * std::exp(-0.5), 1e-14));
}
