#pragma once

// Discrete L^p approximation: minimise Σ_T |T| H(x_T, u_T, Du_T)^p over
// P1 maps on a Kuhn triangulation of the grid cells of Ō with the boundary
// nodes held fixed, and continuation in p.

#include <vector>

#include "linfvar/problem.hpp"

namespace linfvar {

enum class StepRule { Newton, GradientDescent };

struct LpOptions {
  int max_iters = 200;
  double tol_opt = 1e-8;
  StepRule step_rule = StepRule::Newton;
  double armijo_c = 1e-4;
  int max_backtracks = 60;
};

struct LpProblem {
  Hamiltonian H = Hamiltonian::dirichlet(1, 1);
  Subdomain omega;
  /// Supplies the Dirichlet data at the boundary nodes of omega (and the
  /// values kept at nodes of the parent grid outside omega).
  MapField boundary;
  double p = 2.0;
  LpOptions opts;
};

struct LpResult {
  MapField u;  ///< grid map over omega's parent box
  double p_energy = 0.0;     ///< Σ |T| H^p
  double normalized_energy = 0.0;  ///< (Σ |T| H^p)^(1/p)
  double element_sup = 0.0;  ///< max over simplices of H
  double E_inf = 0.0;        ///< sup_energy of u (grid jets at the nodes of Ō)
  double grad_norm = 0.0;    ///< max nodal |∂F/∂u| / lumped mass, F = normalized_energy
  double measure = 0.0;      ///< total simplex volume
  int iters = 0;
  bool converged = false;
  bool stalled = false;      ///< line search exhausted near the optimum
  std::vector<double> energy_history;  ///< p_energy after each accepted step
};

/// Initial guess matching the boundary data: linear interpolation in 1D,
/// transfinite (Coons) interpolation on 2D boxes, boundary mean otherwise.
MapField default_initial_guess(const LpProblem& prob);

/// `init` must agree with the boundary data on the boundary nodes; an empty
/// map selects default_initial_guess.
LpResult lp_minimize(const LpProblem& prob, const MapField& init = {});

struct LpStage {
  double p = 2.0;
  LpResult result;
  double E_inf = 0.0;
  double aronsson_residual_norm = 0.0;  ///< sup over interior nodes, reduced variant
};

/// Schedule must be increasing and start at 2; each stage warm-starts from
/// the previous solution.
std::vector<LpStage> p_continuation(const LpProblem& base, const std::vector<double>& schedule,
                                    const MapField& init = {});

}  // namespace linfvar
