#include <catch_amalgamated.hpp>

#include <sirbass/model.hpp>

#include "generators.hpp"

using namespace sirbass;
using Catch::Matchers::ContainsSubstring;

namespace {

Scenario finite_line(int K, double p, double q, double r) {
  Scenario s;
  s.lattice.topology = Topology::finite_line;
  s.lattice.size = K;
  s.lattice.window_first = 0;
  s.lattice.window_last = K - 1;
  s.params.p = p;
  s.params.q_left = q;
  s.params.r = r;
  s.horizon = 1.0;
  s.grid_step = 0.1;
  return s;
}

std::string violations_of(const Scenario& s) {
  try {
    validate_scenario(s);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("finite line with constant rates is accepted") {
  CHECK_NOTHROW(validate_scenario(finite_line(5, 1.0, 5.0, 2.0)));
}

TEST_CASE("initial probabilities that do not sum to one are rejected") {
  auto s = finite_line(5, 1.0, 5.0, 2.0);
  s.init.overrides[2] = {0.6, 0.6, 0.0};
  const auto msg = violations_of(s);
  CHECK_THAT(msg, ContainsSubstring("probabilities sum to 1.2"));
  CHECK_THAT(msg, ContainsSubstring("node 2"));
}

TEST_CASE("sums within 1e-9 are renormalized, larger gaps are not") {
  auto s = finite_line(3, 0.0, 1.0, 0.0);
  s.init.overrides[1] = {0.5 + 5e-10, 0.5, 0.0};
  CHECK_NOTHROW(validate_scenario(s));
  const auto v = s.initial(1);
  CHECK(std::abs(v.S + v.I + v.R - 1.0) < 1e-15);
  s.init.overrides[1] = {0.5 + 1e-8, 0.5, 0.0};
  CHECK_THROWS_AS(validate_scenario(s), ValidationError);
}

TEST_CASE("affine p(x) = 1 - x/5 on x in [0, 5] is accepted") {
  auto s = finite_line(11, 0.0, 5.0, 0.0);
  s.lattice.geometry = {0.0, 0.5};
  s.params.p = Descriptor{AffineSpace{1.0, -0.2, {}}};
  CHECK_NOTHROW(validate_scenario(s));
  // one node past x = 5 makes p negative there
  s.lattice.size = 12;
  s.lattice.window_last = 11;
  const auto msg = violations_of(s);
  CHECK_THAT(msg, ContainsSubstring("negative rate p"));
  CHECK_THAT(msg, ContainsSubstring("node 11"));
}

TEST_CASE("piecewise rate that turns negative is reported with its node") {
  auto s = finite_line(3, 0.0, 1.0, 0.0);
  s.params.q_left = Descriptor{ConstantSpace{1.0}, PiecewiseTime{{0.5}, {1.0, -0.5}}};
  CHECK_THAT(violations_of(s), ContainsSubstring("negative rate q"));
}

TEST_CASE("eval_params names node and time of a negative evaluation") {
  ParamField f;
  f.p = Descriptor{ConstantSpace{1.0}, PiecewiseTime{{0.5}, {1.0, -1.0}}};
  CHECK_NOTHROW(eval_params(f, Geometry{}, 3, 0.2));
  CHECK_THROWS_WITH(eval_params(f, Geometry{}, 3, 0.7), ContainsSubstring("node 3"));
}

TEST_CASE("malformed structure is rejected") {
  auto s = finite_line(3, 0.0, 1.0, 0.0);
  s.lattice.window_last = 3;
  CHECK_THAT(violations_of(s), ContainsSubstring("window outside"));
  s = finite_line(3, 0.0, 1.0, 0.0);
  s.horizon = 0.0;
  CHECK_THAT(violations_of(s), ContainsSubstring("horizon"));
  s = finite_line(3, 0.0, 1.0, 0.0);
  s.params.p = Descriptor{ConstantSpace{1.0}, PiecewiseTime{{0.5, 0.2}, {1.0, 2.0, 3.0}}};
  CHECK_FALSE(violations_of(s).empty());
  s = finite_line(3, 0.0, 1.0, 0.0);
  s.params.p = Descriptor{TableSpace{0, {1.0, 1.0}}};
  CHECK_THAT(violations_of(s), ContainsSubstring("does not cover node"));
}

TEST_CASE("eval_params on affine fields") {
  ParamField f;
  f.q_left = Descriptor{AffineSpace{5.0, 1.0, {}}};
  const Geometry g{0.0, 0.5};
  CHECK(eval_params(f, g, 4, 0.0).q_left == 7.0);
}

TEST_CASE("node range on each topology") {
  Scenario s = finite_line(8, 0.2, 1.0, 0.0);
  s.lattice.window_first = 2;
  s.lattice.window_last = 4;
  auto r = compute_range(s);
  CHECK(r.first == 0);
  CHECK(r.last == 4);

  s.lattice.sidedness = Sidedness::two_sided;
  s.params.q_right = 1.0;
  r = compute_range(s);
  CHECK(r.last == 7);

  s.lattice.topology = Topology::semi_infinite_line;
  r = compute_range(s);
  CHECK(r.first == 0);
  CHECK(r.extended_right > 0);
  // chains longer than the extension are below the truncation tolerance
  CHECK(special::poisson_tail(r.extended_right, 1.0 * s.horizon) < kTruncationTolerance);

  s.lattice.topology = Topology::infinite_line;
  s.lattice.sidedness = Sidedness::one_sided;
  r = compute_range(s);
  CHECK(r.extended_left > 0);
  CHECK(r.first == 2 - r.extended_left);
  CHECK(r.last == 4);
}

TEST_CASE("time grid appends the horizon") {
  CHECK(make_time_grid(1.0, 0.25) == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  const auto g = make_time_grid(1.0, 0.3);
  CHECK(g.size() == 5);
  CHECK(g.back() == 1.0);
}

TEST_CASE("validated scenarios evaluate to finite nonnegative rates everywhere") {
  gen::Gen g(11);
  for (int n = 0; n < 100; ++n) {
    const auto s = gen::scenario(g);
    REQUIRE_NOTHROW(validate_scenario(s));
    const auto range = compute_range(s);
    for (int k = range.first; k <= range.last; ++k)
      for (double t : make_time_grid(s.horizon, s.horizon / 17)) {
        const auto r = s.rates(k, t);
        CHECK((std::isfinite(r.p) && r.p >= 0 && r.q_left >= 0 && r.q_right >= 0 && r.r >= 0));
      }
  }
}
