#include <doctest.h>

#include <cmath>
#include <random>

#include "linfvar/energy.hpp"
#include "linfvar/errors.hpp"
#include "support.hpp"

using namespace linfvar;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::box_domain;
using testing::num;
using testing::vec;

TEST_CASE("sup energy of closed-form maps") {
  const Subdomain line = box_domain({-1}, {1}, {41});
  CHECK(sup_energy(MapField::parse({"x1"}, 1, 1), Hamiltonian::dirichlet(1, 1), line) == 1.0);
  CHECK(sup_energy(MapField::parse({"x1^2"}, 1, 1), Hamiltonian::dirichlet(1, 1), line) == 4.0);
  CHECK(sup_energy(MapField::parse({"3"}, 1, 1), Hamiltonian::dirichlet(1, 1), line) == 0.0);

  const Subdomain sq = box_domain({1, 1}, {2, 2}, {33, 33});
  const MapField a = MapField::parse({"abs(x1)^(4/3) - abs(x2)^(4/3)"}, 2, 1);
  double oracle = 0.0;
  for (NodeIndex node : sq.closure()) {
    const VectorXd x = sq.parent().coordinates(node);
    oracle = std::max(oracle, 16.0 / 9.0 * (std::cbrt(x[0] * x[0]) + std::cbrt(x[1] * x[1])));
  }
  const double e = sup_energy(a, Hamiltonian::dirichlet(2, 1), sq);
  CHECK(e == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(e == doctest::Approx(32.0 / 9.0 * std::cbrt(4.0)).epsilon(1e-14));
}

TEST_CASE("density values follow closure order") {
  const Subdomain line = box_domain({0}, {1}, {5});
  const auto v = density_values(MapField::parse({"x1^2"}, 1, 1), Hamiltonian::dirichlet(1, 1), line);
  REQUIRE(v.size() == 5);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double x = line.parent().coordinates(line.closure()[k])[0];
    CHECK(v[k] == doctest::Approx(4 * x * x).epsilon(1e-15));
  }
}

TEST_CASE("argmax set of x squared is the two endpoints") {
  const Subdomain line = box_domain({-1}, {1}, {41});
  const ArgmaxSet a = argmax_set(MapField::parse({"x1^2"}, 1, 1), Hamiltonian::dirichlet(1, 1), line, 1e-9);
  REQUIRE(a.nodes.size() == 2);
  CHECK(line.parent().coordinates(a.nodes[0])[0] == -1.0);
  CHECK(line.parent().coordinates(a.nodes[1])[0] == 1.0);
  CHECK(a.sup_value == 4.0);
  CHECK(a.min_value == 0.0);
  CHECK(a.delta == 1e-9);

  const ArgmaxSet all = argmax_set(MapField::parse({"x1"}, 1, 1), Hamiltonian::dirichlet(1, 1), line);
  CHECK(all.nodes.size() == 41);
  CHECK(all.delta == default_delta(1.0));
}

TEST_CASE("Danskin derivatives of simple variations") {
  const Subdomain line = box_domain({-1}, {1}, {41});
  const MapField sq = MapField::parse({"x1^2"}, 1, 1);
  const Hamiltonian H = Hamiltonian::dirichlet(1, 1);
  const DanskinResult d = danskin_both(sq, H, MapField::parse({"x1"}, 1, 1), line, 1e-9);
  CHECK(d.plus == 4.0);
  CHECK(d.minus == -4.0);
  CHECK(danskin_derivative(sq, H, MapField::parse({"x1"}, 1, 1), line, Side::Plus, 1e-9) == 4.0);

  const DanskinResult z = danskin_both(sq, H, MapField::zero(1, 1), line);
  CHECK(z.plus == 0.0);
  CHECK(z.minus == 0.0);

  const Subdomain sqd = box_domain({0, 0}, {1, 1}, {9, 9});
  const DanskinResult o =
      danskin_both(MapField::parse({"x1"}, 2, 1), Hamiltonian::dirichlet(2, 1), MapField::parse({"x2"}, 2, 1), sqd);
  CHECK(o.plus == 0.0);
  CHECK(o.minus == 0.0);

  CHECK_THROWS_AS(danskin_both(sq, H, MapField::zero(2, 1), line), InputError);
}

TEST_CASE("property: Danskin sign symmetry and one-sided difference quotients") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  const Subdomain line = box_domain({-1}, {1}, {31});
  const Hamiltonian H = Hamiltonian::parse("(1 + x1^2) * P11^2", 1, 1);
  int checked = 0;
  for (int k = 0; k < 60; ++k) {
    const std::string us = num(c(rng)) + "*x1 + " + num(c(rng)) + "*x1^2 + " + num(c(rng)) + "*x1^3";
    const std::string ps = num(c(rng)) + " + " + num(c(rng)) + "*x1 + " + num(c(rng)) + "*x1^2";
    const std::string ms = "-(" + ps + ")";
    const MapField u = MapField::parse({us}, 1, 1);
    const DanskinResult d = danskin_both(u, H, MapField::parse({ps}, 1, 1), line);
    const DanskinResult m = danskin_both(u, H, MapField::parse({ms}, 1, 1), line);
    CHECK(m.plus == doctest::Approx(-d.minus).epsilon(1e-14));
    CHECK(m.minus == doctest::Approx(-d.plus).epsilon(1e-14));
    CHECK(d.minus <= d.plus);

    // Difference quotients only converge when the argmax is a single node.
    const ArgmaxSet a = argmax_set(u, H, line);
    const auto v = density_values(u, H, line);
    int near = 0;
    for (double x : v) near += x > a.sup_value - 1e-2 * (1 + a.sup_value);
    if (near != 1) continue;
    ++checked;
    const double t = 1e-6;
    auto energy = [&](double s) {
      return sup_energy(MapField::combine(u, 1.0, MapField::parse({ps}, 1, 1), s), H, line);
    };
    const double scale = 1.0 + std::abs(d.plus) + a.sup_value;
    CHECK(std::abs((energy(t) - a.sup_value) / t - d.plus) <= 1e-4 * scale);
    CHECK(std::abs((energy(-t) - a.sup_value) / -t - d.minus) <= 1e-4 * scale);
  }
  CHECK(checked >= 10);
}

TEST_CASE("convexity verdicts on sampled lines") {
  auto sample = [](auto f) {
    std::vector<std::pair<double, double>> s;
    for (int k = -4; k <= 4; ++k) s.emplace_back(k * 0.25, f(k * 0.25));
    return s;
  };
  CHECK(convex_min_check(sample([](double t) { return std::abs(t); })).pass);
  CHECK(convex_min_check(sample([](double t) { return t * t; })).pass);
  CHECK(convex_min_check(sample([](double) { return 1.0; })).pass);
  const ConvexVerdict down = convex_min_check(sample([](double t) { return -t; }));
  CHECK_FALSE(down.pass);
  CHECK(down.slope_plus == -1.0);
  const ConvexVerdict cap = convex_min_check(sample([](double t) { return -t * t; }));
  CHECK_FALSE(cap.pass);
  CHECK(cap.f_min == -1.0);

  CHECK_THROWS_AS(convex_min_check({{0.0, 1.0}, {1.0, 2.0}}), InputError);
  CHECK_THROWS_AS(convex_min_check({{-1.0, 1.0}, {0.5, 0.0}, {1.0, 2.0}}), InputError);
  CHECK_THROWS_AS(convex_min_check({{0.0, 1.0}, {0.5, 0.0}, {1.0, 2.0}}), InputError);
}

TEST_CASE("empty and singular subdomains") {
  const DomainBox box(vec({0}), vec({1}), {5});
  CHECK_THROWS_AS(Subdomain(box, std::vector<char>(5, 0)), InputError);
  const Subdomain all_singular =
      Subdomain::whole(box).with_singular({0, 1, 2, 3, 4});
  CHECK_THROWS_AS(sup_energy(MapField::parse({"x1"}, 1, 1), Hamiltonian::dirichlet(1, 1), all_singular),
                  InputError);
  CHECK_THROWS_AS(
      sup_energy(MapField::parse({"log(x1)"}, 1, 1), Hamiltonian::dirichlet(1, 1), Subdomain::whole(box)),
      Error);
}
