#include <doctest.h>

#include <random>

#include "linfvar/errors.hpp"
#include "linfvar/linalg.hpp"
#include "support.hpp"

using namespace linfvar;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::max_abs;
using testing::vec;

TEST_CASE("range complement of coordinate matrices") {
  const ProjectionReport id = proj_range_complement(MatrixXd::Identity(2, 2));
  CHECK(id.rank_used == 2);
  CHECK(max_abs(id.projection) == 0.0);
  CHECK(id.basis.cols() == 0);

  MatrixXd e11 = MatrixXd::Zero(2, 2);
  e11(0, 0) = 1.0;
  const ProjectionReport r = proj_range_complement(e11);
  CHECK(r.rank_used == 1);
  CHECK(max_abs(r.projection - vec({0, 1}).asDiagonal().toDenseMatrix()) <= 1e-15);

  MatrixXd row(1, 3);
  row << 0.5, -2, 1;
  const ProjectionReport s = proj_range_complement(row);
  CHECK(s.projection.rows() == 1);
  CHECK(s.projection(0, 0) == 0.0);

  const ProjectionReport z = proj_range_complement(MatrixXd::Zero(3, 2));
  CHECK(z.rank_used == 0);
  CHECK(max_abs(z.projection - MatrixXd::Identity(3, 3)) == 0.0);
  CHECK(max_abs(proj_range_complement(MatrixXd::Zero(2, 0)).projection - MatrixXd::Identity(2, 2)) == 0.0);
}

TEST_CASE("property: projections are symmetric, idempotent and fix their basis") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int k = 0; k < 300; ++k) {
    const int N = 1 + static_cast<int>(rng() % 5), n = 1 + static_cast<int>(rng() % 5);
    const int r = static_cast<int>(rng() % (std::min(N, n) + 1));
    MatrixXd B(N, r), C(r, n);
    for (int i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
    for (int i = 0; i < C.size(); ++i) C.data()[i] = g(rng);
    const MatrixXd A = B * C;
    const ProjectionReport p = proj_range_complement(A);
    CHECK(p.rank_used == r);
    CHECK(numerical_rank(A) == r);
    CHECK(max_abs(p.projection - p.projection.transpose()) <= 1e-10);
    CHECK(max_abs(p.projection * p.projection - p.projection) <= 1e-10);
    CHECK(max_abs(p.projection * p.basis - p.basis) <= 1e-10);
    CHECK(max_abs(p.basis.transpose() * p.basis - MatrixXd::Identity(N - r, N - r)) <= 1e-10);
    CHECK(max_abs(p.projection * A) <= 1e-10 * (1.0 + max_abs(A)));
  }
}

TEST_CASE("reduced nullspace: constant rank equals the plain projection") {
  const MatrixSampler field = [](const VectorXd& y) {
    MatrixXd V(3, 2);
    V << 1 + y[0], y[1], 2, 0, 0, 1 + y[1] * y[1];
    return V;
  };
  const VectorXd x = vec({0.3, 0.1});
  const ProjectionReport red = reduced_nullspace_proj(field, x);
  CHECK(red.projection == proj_range_complement(field(x)).projection);
  CHECK_FALSE(red.rank_discontinuity);
}

TEST_CASE("reduced nullspace at a rank drop") {
  const MatrixSampler drop = [](const VectorXd& y) {
    MatrixXd V = MatrixXd::Zero(2, 2);
    V(0, 0) = y[0];
    return V;
  };
  const VectorXd zero = VectorXd::Zero(2);
  const ProjectionReport red = reduced_nullspace_proj(drop, zero);
  MatrixXd e2e2 = MatrixXd::Zero(2, 2);
  e2e2(1, 1) = 1.0;
  CHECK(max_abs(red.projection - e2e2) <= 1e-8);
  CHECK(red.rank_discontinuity);
  const MatrixXd full = proj_range_complement(drop(zero)).projection;
  CHECK(max_abs(full - MatrixXd::Identity(2, 2)) == 0.0);
  CHECK(max_abs(red.projection * full - red.projection) <= 1e-8);
  // Range of the reduced projection lies in the range of the full one.
  CHECK(max_abs(full * red.basis - red.basis) <= 1e-10);
}

TEST_CASE("reduced nullspace of a full-rank field is zero") {
  const MatrixSampler f = [](const VectorXd& y) {
    MatrixXd V(2, 3);
    V << 1, y[0], 0, 0, 1, y[1];
    return V;
  };
  const ProjectionReport r = reduced_nullspace_proj(f, vec({0.2, 0.3}));
  CHECK(max_abs(r.projection) == 0.0);
  CHECK(r.basis.cols() == 0);
}

TEST_CASE("sampling failures surface as singularity errors") {
  const MatrixSampler bad = [](const VectorXd& y) -> MatrixXd {
    if (y.norm() > 0.0 && y.norm() < 1.0) throw SingularityError("kink");
    return MatrixXd::Zero(2, 1);
  };
  CHECK_THROWS_AS(reduced_nullspace_proj(bad, VectorXd::Zero(2)), SingularityError);
}

TEST_CASE("ball samples stay in the ball and are deterministic") {
  const auto a = ball_samples(vec({1, 2, 3}), 0.5, 32);
  const auto b = ball_samples(vec({1, 2, 3}), 0.5, 32);
  CHECK(a.size() == 32);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK((a[k] - vec({1, 2, 3})).norm() <= 0.5 + 1e-15);
    CHECK(a[k] == b[k]);
  }
  CHECK(radical_inverse(1, 2) == 0.5);
  CHECK(radical_inverse(3, 2) == 0.75);
  CHECK(radical_inverse(2, 3) == doctest::Approx(2.0 / 3.0));
}
