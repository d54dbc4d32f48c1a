#pragma once

// Hamiltonians H(x, eta, P), candidate maps u : R^n -> R^N and their jets.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "linfvar/expr.hpp"
#include "linfvar/grid.hpp"

namespace linfvar {

/// (x, u(x), Du(x), D²u(x)). gradient(α, i) = D_i u_α; hessian[α](i, j) =
/// D_i D_j u_α.
struct Jet2 {
  Eigen::VectorXd x;
  Eigen::VectorXd value;
  Eigen::MatrixXd gradient;
  std::vector<Eigen::MatrixXd> hessian;

  static Jet2 zero(int n, int N, const Eigen::VectorXd& x);
  int n() const { return static_cast<int>(gradient.cols()); }
  int N() const { return static_cast<int>(gradient.rows()); }
  /// this += t * other; x is left untouched.
  Jet2& axpy(double t, const Jet2& other);
  Eigen::VectorXd laplacian() const;
};

struct HamiltonianJet {
  double value = 0.0;
  Eigen::VectorXd H_x;    ///< length n
  Eigen::VectorXd H_eta;  ///< length N
  Eigen::MatrixXd H_P;    ///< N x n
};

/// Value, gradient and Hessian of H with respect to z = (eta, vec(P)), P
/// flattened row-major. Used by the L^p Newton solver.
struct HamiltonianSecondJet {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

class Hamiltonian {
 public:
  /// H(x, eta, P) = |P|² (Frobenius). H_P = 2P.
  static Hamiltonian dirichlet(int n, int N);
  static Hamiltonian from_ast(expr::Ast ast);
  /// "dirichlet" or an expression in x, eta/u and P.
  static Hamiltonian parse(std::string_view src, int n, int N);

  int n() const { return n_; }
  int N() const { return N_; }
  bool is_dirichlet() const { return !ast_; }
  bool depends_on_x() const { return depends_x_; }
  bool depends_on_eta() const { return depends_eta_; }
  bool depends_on_p() const { return depends_p_; }
  const expr::Ast* ast() const { return ast_ ? &*ast_ : nullptr; }
  std::string describe() const;

  double value(const Eigen::VectorXd& x, const Eigen::VectorXd& eta, const Eigen::MatrixXd& P) const;
  HamiltonianJet jet(const Eigen::VectorXd& x, const Eigen::VectorXd& eta,
                     const Eigen::MatrixXd& P) const;
  HamiltonianSecondJet second_jet(const Eigen::VectorXd& x, const Eigen::VectorXd& eta,
                                  const Eigen::MatrixXd& P) const;

 private:
  Hamiltonian(int n, int N, std::optional<expr::Ast> ast);
  void bind(const Eigen::VectorXd& x, const Eigen::VectorXd& eta, const Eigen::MatrixXd& P,
            std::vector<double>& slots) const;

  int n_ = 1, N_ = 1;
  std::optional<expr::Ast> ast_;
  bool depends_x_ = false, depends_eta_ = false, depends_p_ = true;
};

HamiltonianJet hamiltonian_jet(const Hamiltonian& H, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& eta, const Eigen::MatrixXd& P);

/// Candidate map. Closed-form maps are differentiated exactly with dual
/// numbers anywhere off their singular set; grid maps only at nodes, with
/// second-order finite differences (central inside, one-sided at the faces
/// of the box or next to non-finite samples).
class MapField {
 public:
  enum class Kind { ClosedForm, Grid, Function, Combination };
  using JetFunction = std::function<Jet2(const Eigen::VectorXd&)>;

  MapField() = default;

  static MapField closed_form(std::vector<expr::Ast> components);
  static MapField parse(const std::vector<std::string>& components, int n, int N);
  /// samples: node_count x N, rows in DomainBox node order. NaN marks a
  /// node that must not be used.
  static MapField grid(DomainBox box, Eigen::MatrixXd samples);
  static MapField function(int n, int N, JetFunction fn, std::string description = "function");
  static MapField zero(int n, int N);
  /// a * ta + b * tb.
  static MapField combine(const MapField& a, double ta, const MapField& b, double tb);

  int n() const;
  int N() const;
  Kind kind() const;
  bool empty() const { return impl_ == nullptr; }
  /// False when some part of the map only exists at grid nodes.
  bool evaluable_anywhere() const;
  const DomainBox* grid_box() const;
  const Eigen::MatrixXd* samples() const;
  const std::vector<expr::Ast>* components() const;
  std::string describe() const;

  Jet2 jet(const Eigen::VectorXd& x) const;
  Jet2 jet_at_node(const DomainBox& box, NodeIndex node) const;
  Eigen::VectorXd value(const Eigen::VectorXd& x) const;

  struct Impl;

 private:
  explicit MapField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

Jet2 map_jet(const MapField& u, const Eigen::VectorXd& x);
Jet2 map_jet(const MapField& u, const DomainBox& box, NodeIndex node);

/// Samples u at every node of `box`; nodes where evaluation raises a
/// singularity or domain error get NaN samples.
MapField sample_on_grid(const MapField& u, const DomainBox& box);

/// Nodes of `omega` where u's jet or H(·, u, Du) and its derivatives cannot
/// be evaluated, added to the singular mask.
Subdomain prescan_singular(const Subdomain& omega, const MapField& u, const Hamiltonian& H);

/// First-derivative finite-difference stencil at a grid node along one axis:
/// pairs (offset, coefficient). Central where both neighbours exist, one-sided
/// second-order otherwise. `usable(node)` tells whether a node may be read.
std::vector<std::pair<int, double>> first_derivative_stencil(
    const DomainBox& box, NodeIndex node, int axis, const std::function<bool(NodeIndex)>& usable);

}  // namespace linfvar
