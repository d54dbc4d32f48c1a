#pragma once

// Range-complement projections [A]⊥ and reduced-nullspace projections [[V(x)]]⊥.

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace linfvar {

struct ProjectionReport {
  Eigen::MatrixXd projection;  ///< N x N
  int rank_used = 0;           ///< numerical rank of the input at x
  double tolerance_used = 0.0; ///< absolute singular value cutoff
  Eigen::MatrixXd basis;       ///< orthonormal columns spanning the projected subspace
  /// Set when sampled ranks near x differ from the rank at x.
  bool rank_discontinuity = false;
  int samples_used = 0;
};

constexpr double kDefaultRankTolerance = 1e-9;

/// Rank counting singular values >= rel_tol * sigma_max.
int numerical_rank(const Eigen::MatrixXd& A, double rel_tol = kDefaultRankTolerance);

/// Orthogonal projection onto R(A)⊥ = N(Aᵀ). The zero matrix gives I.
ProjectionReport proj_range_complement(const Eigen::MatrixXd& A,
                                       double rel_tol = kDefaultRankTolerance);

using MatrixSampler = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct ReducedOptions {
  double eps = 1e-2;
  int samples = 0;          ///< 0: 16 in 2D, 32 in 3D, at least 8 otherwise
  double rel_tol = kDefaultRankTolerance;
  double tol_angle = -1.0;  ///< < 0: 1e-6 * eps
};

/// Projection onto the part of N(V(x)ᵀ) that survives in every nearby
/// nullspace. If the numerical rank is the same at x and at every sample,
/// the result is exactly proj_range_complement(V(x)). Otherwise the kept
/// subspace is spanned by the eigenvectors of the averaged sample projector,
/// restricted to N(V(x)ᵀ), with eigenvalue >= 1 - tol_angle.
ProjectionReport reduced_nullspace_proj(const MatrixSampler& V, const Eigen::VectorXd& x,
                                        const ReducedOptions& opts = {});

/// Same criterion with caller-supplied samples V(y_k) (e.g. neighbouring
/// grid nodes).
ProjectionReport reduced_nullspace_from_samples(const Eigen::MatrixXd& Vx,
                                                const std::vector<Eigen::MatrixXd>& Vy,
                                                double rel_tol, double tol_angle);

/// Low-discrepancy points (Halton, cube rejection) in the closed ball B_r(center).
std::vector<Eigen::VectorXd> ball_samples(const Eigen::VectorXd& center, double radius, int count);

/// k-th element (k >= 1) of the radical-inverse sequence in `base`.
double radical_inverse(unsigned long k, unsigned base);

}  // namespace linfvar
