#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "linfvar/errors.hpp"
#include "linfvar/flow.hpp"
#include "support.hpp"

using namespace linfvar;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::box_domain;
using testing::num;
using testing::vec;

TEST_CASE("1D linear map exits at the predicted time") {
  const Subdomain line = box_domain({-1}, {1}, {41});
  const MapField u = MapField::parse({"x1"}, 1, 1);
  const Hamiltonian H = Hamiltonian::dirichlet(1, 1);
  for (double x0 : {-0.5, 0.0, 0.3, 0.9}) {
    FlowOptions opts;
    opts.dt = 1e-3;
    const Trajectory tr = integrate_flow(u, H, vec({x0}), vec({1}), line, opts);
    REQUIRE(tr.exited);
    CHECK(*tr.exit_time == doctest::Approx((1 - x0) / 2).epsilon(1e-8));
    CHECK((*tr.exit_point)[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(tr.points.back() == *tr.exit_point);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      CHECK(tr.H_values[k] == 1.0);
      CHECK(tr.speed_sq[k] == 4.0);
    }
  }
  const Trajectory back = integrate_flow(u, H, vec({0.0}), vec({-1}), line);
  REQUIRE(back.exited);
  CHECK(*back.exit_time == doctest::Approx(0.5).epsilon(1e-6));
  CHECK((*back.exit_point)[0] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("linear maps give straight trajectories") {
  const Subdomain sq = box_domain({-1, -1}, {1, 1}, {21, 21});
  const MapField u = MapField::parse({"2*x1 + x2", "x1 - x2"}, 2, 2);
  const Hamiltonian H = Hamiltonian::dirichlet(2, 2);
  MatrixXd A(2, 2);
  A << 2, 1, 1, -1;
  const VectorXd xi = vec({0.6, 0.8});
  const VectorXd v = 2 * A.transpose() * xi;
  CHECK((flow_velocity(u, H, xi, vec({0.1, 0.2})) - v).norm() <= 1e-14);
  FlowOptions opts;
  opts.dt = 1e-3;
  const Trajectory tr = integrate_flow(u, H, vec({0.1, -0.2}), xi, sq, opts);
  REQUIRE(tr.exited);
  for (std::size_t k = 0; k + 1 < tr.points.size(); ++k)
    CHECK((tr.points[k] - vec({0.1, -0.2}) - tr.times[k] * v).norm() <= 1e-12);
  const FlowIdentityReport id = check_flow_identities(tr, u, H, xi, 0.5);
  CHECK(id.drift_rate <= 1e-12);
  CHECK(id.energy_derivative_defect <= 1e-9);
  // The clamped exit step carries the bisection error.
  CHECK(id.monotonicity_margin >= -opts.dt * opts.dt);
}

TEST_CASE("RK4 exit time converges at fourth order") {
  // γ' = 4γ for u = x², so γ(t) = x0 e^{4t} and the exit through 2 is at ln(2 / x0) / 4.
  const Subdomain line = box_domain({0.1}, {2}, {39});
  const MapField u = MapField::parse({"x1^2"}, 1, 1);
  const Hamiltonian H = Hamiltonian::dirichlet(1, 1);
  const double x0 = 0.25, exact = std::log(2.0 / x0) / 4.0;
  std::vector<double> err;
  for (double dt : {0.04, 0.02, 0.01}) {
    FlowOptions opts;
    opts.dt = dt;
    const Trajectory tr = integrate_flow(u, H, vec({x0}), vec({1}), line, opts);
    REQUIRE(tr.exited);
    err.push_back(std::abs(*tr.exit_time - exact));
  }
  CHECK(err[1] <= err[0] / 10.0);
  CHECK(err[2] <= err[1] / 10.0);
  CHECK(err[2] <= 1e-6);
}

TEST_CASE("exit time bound for the linear map") {
  const Subdomain line = box_domain({-1}, {1}, {41});
  const ExitBound b = exit_time_bound(MapField::parse({"x1"}, 1, 1), Hamiltonian::dirichlet(1, 1), vec({1}), line, 0.5);
  REQUIRE(b.estimable);
  CHECK(b.du_sup == 1.0);
  CHECK(b.c1 == 2.0);
  CHECK(b.diameter == 2.0);
  CHECK(b.bound == doctest::Approx(1.0).epsilon(1e-15));
  const ExitBound none = exit_time_bound(MapField::parse({"3"}, 1, 1), Hamiltonian::dirichlet(1, 1), vec({1}), line, 0.5);
  CHECK_FALSE(none.estimable);
}

TEST_CASE("structural condition examples") {
  SamplingBox sb;
  CHECK(check_structural_condition(Hamiltonian::dirichlet(2, 2), 0.5, 500, sb).pass);
  const StructuralVerdict over = check_structural_condition(Hamiltonian::dirichlet(2, 2), 0.6, 500, sb);
  CHECK_FALSE(over.pass);
  CHECK(over.worst_margin < 0.0);
  CHECK(over.samples == 500);
  // H_P vanishes, so the margin is identically zero for every c.
  const StructuralVerdict flat = check_structural_condition(Hamiltonian::parse("x1^2 + u1", 1, 1), 3.0, 200, sb);
  CHECK(flat.pass);
  CHECK(flat.worst_margin == 0.0);
  CHECK_THROWS_AS(check_structural_condition(Hamiltonian::dirichlet(1, 1), 0.5, 0, sb), InputError);

  const StructuralVerdict a = check_structural_condition(Hamiltonian::parse("(2 + x1) * P11^2", 1, 1), 0.15, 300, sb, 7);
  const StructuralVerdict b = check_structural_condition(Hamiltonian::parse("(2 + x1) * P11^2", 1, 1), 0.15, 300, sb, 7);
  CHECK(a.worst_margin == b.worst_margin);
  CHECK(a.pass);
}

TEST_CASE("property: structural margin of weighted Dirichlet energies") {
  // For H = w |P|² the margin is (2w - 4 c w²) |ξᵀP|², nonnegative iff c <= 1 / (2 w).
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> wd(0.5, 3.0);
  SamplingBox sb;
  for (int k = 0; k < 10; ++k) {
    const double w = wd(rng);
    const Hamiltonian H = Hamiltonian::parse(num(w) + " * (P11^2 + P12^2)", 2, 1);
    CHECK(check_structural_condition(H, 0.5 / w, 300, sb, k).pass);
    CHECK_FALSE(check_structural_condition(H, 0.55 / w, 300, sb, k).pass);
  }
}

TEST_CASE("maximum and minimum principles") {
  const Subdomain sq = box_domain({1, 1}, {2, 2}, {17, 17});
  const MaxMinReport a = verify_maxmin(MapField::parse({"abs(x1)^(4/3) - abs(x2)^(4/3)"}, 2, 1),
                                       Hamiltonian::dirichlet(2, 1), sq);
  CHECK(a.pass);
  CHECK(a.max_boundary >= a.sup_interior - a.tol_grid);

  const Subdomain line = box_domain({-1}, {1}, {41});
  const MaxMinReport s = verify_maxmin(MapField::parse({"x1^2"}, 1, 1), Hamiltonian::dirichlet(1, 1), line);
  CHECK(s.max_principle);
  CHECK_FALSE(s.min_principle);
  CHECK_FALSE(s.pass);
  CHECK(s.inf_interior == 0.0);
  CHECK(s.min_boundary == 4.0);

  const MaxMinReport lin = verify_maxmin(MapField::parse({"x1 - 3*x2"}, 2, 1), Hamiltonian::dirichlet(2, 1), sq);
  CHECK(lin.pass);
  CHECK(lin.lipschitz <= 1e-12);
}

TEST_CASE("trajectory CSV layout") {
  const Subdomain sq = box_domain({-1, -1}, {1, 1}, {11, 11});
  FlowOptions opts;
  opts.dt = 0.05;
  const Trajectory tr =
      integrate_flow(MapField::parse({"x1 + x2"}, 2, 1), Hamiltonian::dirichlet(2, 1), vec({0, 0}), vec({1}), sq, opts);
  const std::string csv = trajectory_csv(tr);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,gamma_1,gamma_2,H");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 3);
  }
  CHECK(rows == tr.times.size());
  std::istringstream first(csv.substr(csv.find('\n') + 1));
  double t = -1;
  first >> t;
  CHECK(t == 0.0);
}

TEST_CASE("closure membership") {
  const DomainBox box(vec({0, 0}), vec({1, 1}), {11, 11});
  const Subdomain disc = Subdomain::ball(box, vec({0.5, 0.5}), 0.3);
  CHECK(inside_closure(disc, vec({0.5, 0.5})));
  CHECK_FALSE(inside_closure(disc, vec({0.05, 0.05})));
  CHECK_FALSE(inside_closure(disc, vec({1.5, 0.5})));
  CHECK(inside_closure(Subdomain::whole(box), vec({1.0, 0.0})));
}
