#pragma once

// Characteristic flow γ' = ξᵀH_P(·, u, Du)(γ), its identities, the
// structural condition and the maximum/minimum principles.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "linfvar/problem.hpp"

namespace linfvar {

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> points;
  std::vector<double> H_values;
  std::vector<double> xi_u;      ///< ξᵀu(γ(t))
  std::vector<double> speed_sq;  ///< |ξᵀH_P|² at γ(t)
  bool exited = false;
  std::optional<double> exit_time;
  std::optional<Eigen::VectorXd> exit_point;
};

struct FlowOptions {
  double dt = -1.0;     ///< < 0: h / (4 max speed over Ō)
  double t_max = -1.0;  ///< < 0: 10x the exit-time bound, else 1e3 dt
  double c0 = 0.5;      ///< structural constant used for the default t_max
};

/// Velocity ξᵀH_P(y, u(y), Du(y)) ∈ R^n.
Eigen::VectorXd flow_velocity(const MapField& u, const Hamiltonian& H, const Eigen::VectorXd& xi,
                              const Eigen::VectorXd& y);

/// Whether y lies in Ō: inside the bounding box of the mask, and for
/// non-box masks, nearest node masked and not singular.
bool inside_closure(const Subdomain& omega, const Eigen::VectorXd& y);

/// Fixed-step RK4; the boundary crossing is located by bisection on the
/// last step to within dt * 1e-6. The final sample is the exit point.
Trajectory integrate_flow(const MapField& u, const Hamiltonian& H, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& xi, const Subdomain& omega, const FlowOptions& opts = {});

struct ExitBound {
  bool estimable = false;
  double bound = 0.0;
  double du_sup = 0.0;  ///< max over Ō of the Frobenius norm of Du
  double c1 = 0.0;      ///< min over Ō of |ξᵀH_P|
  double diameter = 0.0;
};

/// ‖Du‖∞ diam(O) / (c0 c1²).
ExitBound exit_time_bound(const MapField& u, const Hamiltonian& H, const Eigen::VectorXd& xi,
                          const Subdomain& omega, double c0);

struct FlowIdentityReport {
  /// max over interior samples of |dH/dt (central difference) - ξᵀH_P·D(H)|.
  double energy_derivative_defect = 0.0;
  /// max |H(t_k) - H(0)| / max(t_k, dt).
  double drift_rate = 0.0;
  /// min over steps of Δ(ξᵀu) - c Δt (s_k + s_{k+1}) / 2 with s = |ξᵀH_P|².
  double monotonicity_margin = 0.0;
  double max_dt = 0.0;
};

FlowIdentityReport check_flow_identities(const Trajectory& traj, const MapField& u, const Hamiltonian& H,
                                         const Eigen::VectorXd& xi, double c);

struct SamplingBox {
  Eigen::VectorXd x_lo, x_hi;
  double eta_radius = 2.0;
  double p_radius = 2.0;
};

struct StructuralVerdict {
  bool pass = false;
  double worst_margin = 0.0;
  Eigen::VectorXd worst_xi, worst_x, worst_eta;
  Eigen::MatrixXd worst_P;
  int samples = 0;
};

/// min over random (x, η, P, unit ξ) of (ξᵀH_P)·(ξᵀP) - c |ξᵀH_P|²; pass
/// iff >= -1e-12.
StructuralVerdict check_structural_condition(const Hamiltonian& H, double c, int sample_count,
                                             const SamplingBox& box, std::uint64_t seed = 0);

struct MaxMinReport {
  double sup_interior = 0.0, max_boundary = 0.0;
  double inf_interior = 0.0, min_boundary = 0.0;
  double tol_grid = 0.0;
  double lipschitz = 0.0;
  bool max_principle = false, min_principle = false;
  bool pass = false;
};

/// tol_grid = L h with L the largest difference quotient of the density
/// between grid-adjacent closure nodes.
MaxMinReport verify_maxmin(const MapField& u, const Hamiltonian& H, const Subdomain& omega);

/// CSV with columns t, gamma_1..gamma_n, H.
std::string trajectory_csv(const Trajectory& traj);

}  // namespace linfvar
