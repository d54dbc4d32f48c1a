#include "linfvar/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "linfvar/errors.hpp"

namespace linfvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Svd {
  MatrixXd U;
  VectorXd sigma;
  int rank = 0;
  double cutoff = 0.0;
};

Svd decompose(const MatrixXd& A, double rel_tol) {
  if (!A.allFinite()) throw SingularityError("matrix has non-finite entries");
  Svd s;
  if (A.rows() == 0) return s;
  if (A.cols() == 0) {
    s.U = MatrixXd::Identity(A.rows(), A.rows());
    return s;
  }
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullU);
  s.U = svd.matrixU();
  s.sigma = svd.singularValues();
  const double smax = s.sigma.size() ? s.sigma[0] : 0.0;
  s.cutoff = rel_tol * smax;
  if (smax > 0.0)
    for (Eigen::Index k = 0; k < s.sigma.size(); ++k)
      if (s.sigma[k] >= s.cutoff) ++s.rank;
  return s;
}

ProjectionReport from_basis(MatrixXd basis, int rank, double cutoff) {
  ProjectionReport r;
  r.projection = basis * basis.transpose();
  r.basis = std::move(basis);
  r.rank_used = rank;
  r.tolerance_used = cutoff;
  return r;
}

}  // namespace

int numerical_rank(const MatrixXd& A, double rel_tol) { return decompose(A, rel_tol).rank; }

ProjectionReport proj_range_complement(const MatrixXd& A, double rel_tol) {
  if (!(rel_tol > 0.0)) throw InputError("rank tolerance must be positive");
  const Svd s = decompose(A, rel_tol);
  const auto N = A.rows();
  return from_basis(s.U.rightCols(N - s.rank), s.rank, s.cutoff);
}

ProjectionReport reduced_nullspace_from_samples(const MatrixXd& Vx, const std::vector<MatrixXd>& Vy,
                                                double rel_tol, double tol_angle) {
  ProjectionReport full = proj_range_complement(Vx, rel_tol);
  full.samples_used = static_cast<int>(Vy.size());
  const auto k = full.basis.cols();
  bool discontinuous = false;
  std::vector<MatrixXd> Q;
  Q.reserve(Vy.size());
  for (const MatrixXd& V : Vy) {
    if (V.rows() != Vx.rows() || V.cols() != Vx.cols()) throw InputError("sampled matrix has the wrong shape");
    ProjectionReport p = proj_range_complement(V, rel_tol);
    if (p.rank_used != full.rank_used) discontinuous = true;
    Q.push_back(std::move(p.projection));
  }
  full.rank_discontinuity = discontinuous;
  if (k == 0 || !discontinuous) return full;

  MatrixXd M = MatrixXd::Zero(k, k);
  for (const MatrixXd& q : Q) M += full.basis.transpose() * q * full.basis;
  M /= static_cast<double>(Q.size());
  M = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < k; ++i)
    if (eig.eigenvalues()[i] >= 1.0 - tol_angle) keep.push_back(i);
  MatrixXd W(k, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    W.col(static_cast<Eigen::Index>(c)) = eig.eigenvectors().col(keep[c]);
  ProjectionReport r = from_basis(full.basis * W, full.rank_used, full.tolerance_used);
  r.rank_discontinuity = true;
  r.samples_used = full.samples_used;
  return r;
}

double radical_inverse(unsigned long k, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (k > 0) {
    r += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

std::vector<VectorXd> ball_samples(const VectorXd& center, double radius, int count) {
  static constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  const auto n = center.size();
  if (n > static_cast<Eigen::Index>(std::size(kPrimes))) throw InputError("ball sampling supports n <= 12");
  std::vector<VectorXd> out;
  for (unsigned long k = 1; static_cast<int>(out.size()) < count; ++k) {
    VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = 2.0 * radical_inverse(k, kPrimes[i]) - 1.0;
    if (z.squaredNorm() <= 1.0) out.push_back(center + radius * z);
    if (k > 1000000UL) throw NumericalError("ball sampling failed to produce points");
  }
  return out;
}

ProjectionReport reduced_nullspace_proj(const MatrixSampler& V, const VectorXd& x,
                                        const ReducedOptions& opts) {
  if (!(opts.eps > 0.0)) throw InputError("reduced projection radius must be positive");
  int m = opts.samples;
  if (m <= 0) m = x.size() == 2 ? 16 : x.size() == 3 ? 32 : 16;
  if (m < 8) throw InputError("reduced projection needs at least 8 samples");
  const double tol_angle = opts.tol_angle < 0.0 ? 1e-6 * opts.eps : opts.tol_angle;

  const MatrixXd Vx = V(x);
  const ProjectionReport at_x = proj_range_complement(Vx, opts.rel_tol);
  if (at_x.basis.cols() == 0) return at_x;

  std::vector<MatrixXd> Vy;
  for (const VectorXd& y : ball_samples(x, opts.eps, m)) {
    try {
      Vy.push_back(V(y));
    } catch (const Error& e) {
      throw SingularityError(std::string("reduced projection sampling failed: ") + e.what());
    }
  }
  return reduced_nullspace_from_samples(Vx, Vy, opts.rel_tol, tol_angle);
}

}  // namespace linfvar
