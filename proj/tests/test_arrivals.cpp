#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oisnet/arrivals.hpp"
#include "oisnet/errors.hpp"
#include "oracles.hpp"

using namespace oisnet;

TEST_CASE("pair feature takes three values by pair class") {
  CHECK(pair_feature(hub, private_node) == doctest::Approx(1.0));
  CHECK(pair_feature(private_node, hub) == doctest::Approx(1.0));
  CHECK(pair_feature(hub, hub) == doctest::Approx(1.0 / 3.0));
  CHECK(pair_feature(private_node, private_node) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(pair_feature(0, 1), std::domain_error);
}

TEST_CASE("intensity at default parameters") {
  IntensityParams p;
  CHECK(p.gamma == 3.0);
  CHECK(p.eta == -4.0);
  CHECK(p.theta_int == 20.0);
  CHECK(p.beta == 5.0);
  CHECK(intensity(p, 0.04, 1.0) == doctest::Approx(0.14936120510359183).epsilon(1e-14));
  CHECK(intensity(p, 0.04, 1.0 / 3.0) == doctest::Approx(0.1307169416067649).epsilon(1e-13));
  CHECK(intensity(p, 0.04, -1.0) == doctest::Approx(0.10011980988097824).epsilon(1e-13));
  // Hub-private pairs trade most, private-private least, at any positive rate.
  for (double r : {0.001, 0.04, 0.2}) {
    CHECK(intensity(p, r, 1.0) > intensity(p, r, 1.0 / 3.0));
    CHECK(intensity(p, r, 1.0 / 3.0) > intensity(p, r, -1.0));
  }
  p.gamma = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("arrivals lie in the window, in order, on the right grid day") {
  IntensityParams p;
  p.gamma = 300.0;
  const RatePath path(std::vector<double>(731, 0.04));
  Engine rng(1);
  const auto events = simulate_arrivals(p, path, 1.0, 100, 500, rng);
  REQUIRE(events.size() > 10);
  double prev = 100.0 / 365.0;
  for (const auto& e : events) {
    CHECK(e.time > prev);
    prev = e.time;
    CHECK(e.day > 100);
    CHECK(e.day <= 500);
    CHECK(e.time <= static_cast<double>(e.day) / 365.0 + 1e-12);
    CHECK(e.time > static_cast<double>(e.day - 1) / 365.0 - 1e-12);
  }
}

TEST_CASE("tiny intensity gives no arrivals") {
  IntensityParams p;
  p.gamma = 1e-12;
  const RatePath path(std::vector<double>(3651, 0.04));
  Engine rng(2);
  for (int k = 0; k < 100; ++k) CHECK(simulate_arrivals(p, path, 1.0, 0, 3650, rng).empty());
}

TEST_CASE("counts under a constant rate are Poisson") {
  IntensityParams p;
  const double r = 0.05;
  const RatePath path(std::vector<double>(3651, r));
  const double mean = intensity(p, r, 1.0) * 10.0;
  Engine rng(3);
  const int runs = 4000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < runs; ++k) {
    const double n = static_cast<double>(simulate_arrivals(p, path, 1.0, 0, 3650, rng).size());
    s += n;
    s2 += n * n;
  }
  const double m = s / runs;
  CHECK(std::abs(m - mean) < 4.0 * std::sqrt(mean / runs));
  CHECK(s2 / runs - m * m == doctest::Approx(mean).epsilon(0.1));
}

TEST_CASE("delta rules") {
  Engine rng(4);
  CHECK(draw_delta(hub, private_node, DeltaRule::hub_receiver, rng) == 1);
  CHECK(draw_delta(private_node, hub, DeltaRule::hub_receiver, rng) == -1);
  CHECK(draw_delta(hub, hub, DeltaRule::hub_receiver, rng) == 1);
  int plus = 0;
  for (int k = 0; k < 10000; ++k) plus += draw_delta(hub, private_node, DeltaRule::random, rng) == 1;
  CHECK(std::abs(plus - 5000) < 4 * 50);
  CHECK(parse_delta_rule("random") == DeltaRule::random);
  CHECK(parse_delta_rule(to_string(DeltaRule::hub_receiver)) == DeltaRule::hub_receiver);
  CHECK_THROWS_AS(parse_delta_rule("payer"), ParameterError);
}

TEST_CASE("marks use the fair rate of the start-day bond") {
  const ref::CurveBonds bonds(std::vector<double>(1000, 0.03));
  MarkConfig cfg;
  cfg.principal = 2.5;
  cfg.tenor_days = 180;
  Engine rng(5);
  const auto m = draw_marks(40, hub, private_node, bonds, cfg, rng);
  CHECK(m.maturity == 220);
  CHECK(m.principal == 2.5);
  CHECK(m.fair_rate == doctest::Approx((1.0 / bonds.price(40, 220) - 1.0) / (180.0 / 365.0)).epsilon(1e-14));
  CHECK((m.delta_i == 1 || m.delta_i == -1));
}
