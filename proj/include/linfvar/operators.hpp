#pragma once

// Pointwise residuals of the Aronsson system, its tangential and normal
// parts, and the ∞-Laplace system.

#include <optional>

#include "linfvar/linalg.hpp"
#include "linfvar/problem.hpp"

namespace linfvar {

/// Where a residual is evaluated: an arbitrary point (closed-form maps) or
/// a grid node (required for grid maps; derivatives of composed fields then
/// use grid stencils).
struct EvalSite {
  Eigen::VectorXd x;
  const DomainBox* box = nullptr;
  NodeIndex node = 0;

  static EvalSite at(Eigen::VectorXd x) { return EvalSite{std::move(x), nullptr, 0}; }
  static EvalSite at_node(const DomainBox& box, NodeIndex node) {
    return EvalSite{box.coordinates(node), &box, node};
  }
  bool on_grid() const { return box != nullptr; }
};

enum class Variant { Full, Reduced };

struct OperatorOptions {
  Variant variant = Variant::Reduced;
  /// Radius of the reduced-projection ball; < 0 selects two grid spacings at
  /// grid sites and 1e-2 * (1 + |x|) elsewhere.
  double eps = -1.0;
  int samples = 0;
  double rel_tol = kDefaultRankTolerance;
  double tol_angle = -1.0;
  /// Divergence step for closed-form maps; < 0 selects 1e-5 * (1 + |x|).
  double h_div = -1.0;
  /// At grid sites of closed-form maps, use grid stencils for Div H_P too.
  bool grid_divergence = false;
};

/// Spatial gradient of x -> H(x, u(x), Du(x)) by the chain rule.
Eigen::VectorXd composite_gradient(const MapField& u, const Hamiltonian& H, const EvalSite& site);
Eigen::VectorXd composite_gradient(const Jet2& j, const HamiltonianJet& h);

/// x -> H_P(x, u(x), Du(x)).
Eigen::MatrixXd hp_field(const MapField& u, const Hamiltonian& H, const Eigen::VectorXd& x);

/// Row-wise divergence of the composed field H_P(·, u, Du) at the site.
Eigen::VectorXd divergence_hp(const MapField& u, const Hamiltonian& H, const EvalSite& site,
                              const OperatorOptions& opts = {});

/// [V(x)]⊥ (Full) or [[V(x)]]⊥ (Reduced) for a composed field V(y) at the site.
ProjectionReport normal_projection(const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& at_point,
                                   const std::function<Eigen::MatrixXd(NodeIndex)>& at_node,
                                   const EvalSite& site, const OperatorOptions& opts);

struct AronssonResidual {
  Eigen::VectorXd tangential, normal, total;
  Variant variant = Variant::Reduced;
  double tangential_norm = 0.0, normal_norm = 0.0, total_norm = 0.0;
  bool rank_discontinuity = false;
  int rank = 0;
};

AronssonResidual aronsson_residual(const MapField& u, const Hamiltonian& H, const EvalSite& site,
                                   const OperatorOptions& opts = {});

/// Du·D(|Du|²) + |Du|² Π Δu with Π = [Du]⊥ (Full) or [[Du]]⊥ (Reduced).
Eigen::VectorXd infinity_laplacian_residual(const MapField& u, const EvalSite& site,
                                            const OperatorOptions& opts = {});

struct SplitResiduals {
  Eigen::VectorXd tangential;       ///< H_P D(H(·, u, Du))
  Eigen::VectorXd normal;           ///< H Π (Div H_P - H_η); tangential + normal = total
  Eigen::VectorXd normal_unscaled;  ///< Π (Div H_P - H_η)
  double density = 0.0;             ///< H(x, u, Du)
  bool rank_discontinuity = false;
};

/// The two systems whose conjunction is the Aronsson system.
SplitResiduals split_residuals(const MapField& u, const Hamiltonian& H, const EvalSite& site,
                               const OperatorOptions& opts = {});

}  // namespace linfvar
