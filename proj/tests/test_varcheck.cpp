#include <doctest.h>

#include <cmath>
#include <numbers>

#include "linfvar/errors.hpp"
#include "linfvar/varcheck.hpp"
#include "support.hpp"

using namespace linfvar;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::box_domain;
using testing::vec;

namespace {

const double kPi = std::numbers::pi;

MapField line_psi(const std::string& s) { return MapField::parse({s}, 1, 1); }

}  // namespace

TEST_CASE("free variations: linear passes, x squared fails with a witness") {
  const Subdomain line = box_domain({-1}, {1}, {41});
  const Hamiltonian H = Hamiltonian::dirichlet(1, 1);
  const Verdict lin = absolute_minimiser_test(MapField::parse({"x1"}, 1, 1), H, line);
  CHECK(lin.pass);
  CHECK(lin.trials == 50);
  CHECK(lin.competitors > 0);
  CHECK(lin.tolerance == doctest::Approx(2e-9));
  CHECK(lin.worst_violation <= lin.tolerance);

  const MapField sq = MapField::parse({"x1^2"}, 1, 1);
  const Verdict bad = absolute_minimiser_test(sq, H, line);
  CHECK_FALSE(bad.pass);
  REQUIRE(bad.witness);
  const VariationWitness& w = *bad.witness;
  CHECK(w.kind == VariationKind::Free);
  CHECK(w.competitor_energy < w.base_energy);
  // The witness reproduces from its printed components.
  const MapField phi = MapField::parse(w.phi, 1, 1);
  const double e = sup_energy(MapField::combine(sq, 1.0, phi, w.scale), H, line);
  CHECK(e == doctest::Approx(w.competitor_energy).epsilon(1e-12));
  CHECK(bad.worst_violation == doctest::Approx(w.base_energy - w.competitor_energy).epsilon(1e-12));
}

TEST_CASE("free variations with zero amplitude cannot improve") {
  VariationOptions opts;
  opts.amplitude = 0.0;
  const Verdict v =
      absolute_minimiser_test(MapField::parse({"x1^2"}, 1, 1), Hamiltonian::dirichlet(1, 1), box_domain({-1}, {1}, {41}), opts);
  CHECK(v.pass);
  CHECK(v.worst_violation == 0.0);
  CHECK_FALSE(v.witness);
}

TEST_CASE("free variations are deterministic in the seed") {
  const Subdomain line = box_domain({-1}, {1}, {41});
  VariationOptions a, b;
  a.seed = b.seed = 9;
  const MapField u = MapField::parse({"x1^2"}, 1, 1);
  const Verdict va = absolute_minimiser_test(u, Hamiltonian::dirichlet(1, 1), line, a);
  const Verdict vb = absolute_minimiser_test(u, Hamiltonian::dirichlet(1, 1), line, b);
  CHECK(va.worst_violation == vb.worst_violation);
  REQUIRE(va.witness);
  CHECK(va.witness->phi == vb.witness->phi);
}

TEST_CASE("variations need box subdomains") {
  const DomainBox box(vec({-1, -1}), vec({1, 1}), {11, 11});
  const Subdomain disc = Subdomain::ball(box, vec({0, 0}), 0.8);
  const MapField u = MapField::parse({"x1"}, 2, 1);
  CHECK_THROWS_AS(absolute_minimiser_test(u, Hamiltonian::dirichlet(2, 1), disc), InputError);
  CHECK_THROWS_AS(rank_one_test(u, Hamiltonian::dirichlet(2, 1), disc, {vec({1})}), InputError);
}

TEST_CASE("property: random mode sums vanish on the faces and respect the amplitude") {
  const Subdomain sq = box_domain({0, 1}, {2, 2}, {9, 9});
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const double amp = 0.1 + 0.1 * static_cast<double>(seed);
    const MapField phi = MapField::closed_form({random_box_mode_sum(sq, {2, 1}, amp, seed)});
    for (NodeIndex node : sq.boundary()) CHECK(std::abs(phi.value(sq.parent().coordinates(node))[0]) <= 1e-12);
    for (NodeIndex node : sq.closure()) CHECK(map_jet(phi, sq.parent(), node).gradient.norm() <= amp * (1 + 1e-12));
  }
  CHECK_THROWS_AS(random_box_mode_sum(sq, {2, 1}, 1.0, 0, 0), InputError);
}

TEST_CASE("rank-one variations") {
  const Subdomain sq = box_domain({-1, -1}, {1, 1}, {21, 21});
  const MapField lin = MapField::parse({"x1 + 2*x2", "x1 - x2"}, 2, 2);
  const Hamiltonian H2 = Hamiltonian::dirichlet(2, 2);
  const Verdict ok = rank_one_test(lin, H2, sq, {vec({1, 0}), vec({0, 1}), vec({1, 1})});
  CHECK(ok.pass);
  CHECK(ok.trials == 150);

  const Verdict bad =
      rank_one_test(MapField::parse({"x1^2"}, 1, 1), Hamiltonian::dirichlet(1, 1), box_domain({-1}, {1}, {41}), {vec({1})});
  CHECK_FALSE(bad.pass);
  REQUIRE(bad.witness);
  CHECK(bad.witness->competitor_energy < bad.witness->base_energy);
  CHECK(bad.witness->direction == vec({1}));

  CHECK_THROWS_AS(rank_one_test(lin, H2, sq, {vec({0, 0})}), InputError);
  CHECK_THROWS_AS(rank_one_test(lin, H2, sq, {vec({1})}), InputError);
  CHECK_THROWS_AS(rank_one_test(lin, H2, sq, {}), InputError);
}

TEST_CASE("normal variations") {
  const Subdomain line = box_domain({0}, {1}, {21});
  const Verdict scalar = normal_variation_test(MapField::parse({"x1"}, 1, 1), Hamiltonian::dirichlet(1, 1), line);
  CHECK(scalar.vacuous);
  CHECK(scalar.pass);

  const Verdict curve = normal_variation_test(MapField::parse({"x1", "0"}, 1, 2), Hamiltonian::dirichlet(1, 2), line);
  CHECK_FALSE(curve.vacuous);
  CHECK(curve.pass);
  CHECK(curve.competitors > 0);
  CHECK(curve.admissibility_defect <= 1e-9);

  // |u'|² = 1 + 4x² has its sup at x = 1 where the normal bump (0, c(1 - x)) lowers it.
  const Verdict bent = normal_variation_test(MapField::parse({"x1", "x1^2"}, 1, 2), Hamiltonian::dirichlet(1, 2), line);
  CHECK_FALSE(bent.pass);
  CHECK_FALSE(bent.vacuous);
  CHECK(bent.competitors > 0);
}

TEST_CASE("sphere variations of a linear map") {
  const Subdomain sq = box_domain({-1, -1}, {1, 1}, {21, 21});
  const DanskinResult d =
      sphere_danskin(MapField::parse({"x1"}, 2, 1), Hamiltonian::dirichlet(2, 1), sq, vec({0, 0}), vec({1}), 0.5);
  CHECK(d.plus == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(d.minus == doctest::Approx(-2.0).epsilon(1e-12));
  const MapField phi = sphere_variation(vec({0, 0}), vec({2}), 0.5);
  CHECK(phi.value(vec({0.5, 0}))[0] == doctest::Approx(0.0));
  CHECK(phi.value(vec({0, 0}))[0] == doctest::Approx(-0.5));
}

TEST_CASE("stationarity scan") {
  const Subdomain line = box_domain({-1}, {1}, {41});
  const MapField u = MapField::parse({"x1"}, 1, 1);
  const Hamiltonian H = Hamiltonian::dirichlet(1, 1);
  const MapField psi = line_psi("sin(3.141592653589793 * (x1 + 1))");
  const StationarityReport r = stationarity_scan(u, H, line, psi);
  CHECK(r.argmax_size == 41);
  CHECK(r.max_val == doctest::Approx(2 * kPi).epsilon(1e-12));
  CHECK(r.min_val == doctest::Approx(-2 * kPi).epsilon(1e-12));
  CHECK(r.statement_II);
  CHECK(r.statement_III);
  CHECK(r.k_fraction > 0.0);
  CHECK(r.K.size() <= 4);

  const DanskinResult d = danskin_both(u, H, psi, line);
  CHECK(r.max_val == d.plus);
  CHECK(r.min_val == d.minus);

  const StationarityReport z = stationarity_scan(u, H, line, MapField::zero(1, 1));
  CHECK(z.K.size() == 41);
  CHECK(z.k_fraction == 1.0);
  CHECK(z.max_val == 0.0);

  CHECK_THROWS_AS(stationarity_scan(u, H, line, line_psi("x1 + 2")), InputError);
}

TEST_CASE("sine test basis vanishes on the boundary") {
  const Subdomain sq = box_domain({0, 0}, {1, 2}, {9, 9});
  const auto basis = sine_test_basis(sq, 2, 7);
  CHECK(basis.size() == 7);
  for (const auto& psi : basis) {
    CHECK(psi.N() == 2);
    CHECK_NOTHROW(require_vanishing_on_boundary(psi, sq));
  }
  CHECK_THROWS_AS(sine_test_basis(sq, 1, 0), InputError);
}

TEST_CASE("measure residuals") {
  const Subdomain line = box_domain({-1}, {1}, {41});
  const MapField u = MapField::parse({"x1"}, 1, 1);
  const Hamiltonian H = Hamiltonian::dirichlet(1, 1);
  const auto basis = sine_test_basis(line, 1, 10);

  const DiscreteMeasure uni = DiscreteMeasure::uniform(line);
  CHECK(uni.total() == doctest::Approx(1.0).epsilon(1e-14));
  const MeasureResidual r = measure_divergence_residual(u, H, line, uni, basis);
  CHECK(r.pass);
  CHECK(r.per_psi.size() == 10);

  const NodeIndex mid = 20;
  const MeasureResidual dir = measure_divergence_residual(u, H, line, DiscreteMeasure::dirac(mid), basis);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double dpsi = map_jet(basis[k], line.parent(), mid).gradient(0, 0);
    CHECK(dir.per_psi[k] == doctest::Approx(2 * dpsi).epsilon(1e-14));
  }

  const DiscreteMeasure a = DiscreteMeasure::normalized({{3, 1.0}, {30, 3.0}});
  const DiscreteMeasure b = DiscreteMeasure::normalized({{3, 2.0}, {30, 6.0}});
  CHECK(measure_divergence_residual(u, H, line, a, basis).per_psi ==
        measure_divergence_residual(u, H, line, b, basis).per_psi);
  CHECK(a.total() == 1.0);

  CHECK_THROWS_AS(DiscreteMeasure::normalized({{1, -1.0}}), InputError);
  CHECK_THROWS_AS(DiscreteMeasure::normalized({}), InputError);
  CHECK_THROWS_AS(
      measure_divergence_residual(MapField::parse({"x1^2"}, 1, 1), H, line, DiscreteMeasure::dirac(mid), basis),
      InputError);
  CHECK_THROWS_AS(measure_divergence_residual(u, H, line, uni, {}), InputError);
}

TEST_CASE("a passing stationarity verdict is consistent with the variation tests") {
  // Each stage of the chain agrees for the linear map and disagrees for x².
  const Subdomain line = box_domain({-1}, {1}, {41});
  const Hamiltonian H = Hamiltonian::dirichlet(1, 1);
  const auto basis = sine_test_basis(line, 1, 8);
  for (const char* src : {"x1", "x1^2"}) {
    const MapField u = MapField::parse({src}, 1, 1);
    bool stationary = true;
    for (const auto& psi : basis) stationary = stationary && stationarity_scan(u, H, line, psi).statement_II;
    const bool minimal = absolute_minimiser_test(u, H, line).pass;
    CHECK(stationary == minimal);
    CHECK(minimal == (std::string(src) == "x1"));
  }
}
