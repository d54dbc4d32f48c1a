#pragma once

// Supremal energy E∞(u, O) = max over the nodes of Ō of H(·, u, Du), its
// argmax set and one-sided directional derivatives.

#include <utility>
#include <vector>

#include "linfvar/problem.hpp"

namespace linfvar {

/// Jet of u and first derivatives of H at one node.
struct NodeEvaluation {
  NodeIndex node = 0;
  Jet2 u;
  HamiltonianJet H;
};

NodeEvaluation evaluate_node(const MapField& u, const Hamiltonian& H, const DomainBox& box,
                             NodeIndex node);

/// H(x, u(x), Du(x)) at every closure node of `omega`, in closure order.
std::vector<double> density_values(const MapField& u, const Hamiltonian& H, const Subdomain& omega);

double sup_energy(const MapField& u, const Hamiltonian& H, const Subdomain& omega);

struct ArgmaxSet {
  std::vector<NodeIndex> nodes;
  std::vector<double> values;  ///< H-values of `nodes`
  double sup_value = 0.0;
  double min_value = 0.0;      ///< min over all of Ō
  double delta = 0.0;
};

/// delta < 0 selects the default 1e-7 * (1 + |sup|).
double default_delta(double sup_value);
ArgmaxSet argmax_set(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                     double delta = -1.0);

enum class Side { Plus, Minus };

/// H_P : Dφ + H_η · φ at a node.
double linearized_density(const NodeEvaluation& at, const Jet2& phi);

struct DanskinResult {
  double plus = 0.0, minus = 0.0;
  NodeIndex plus_node = 0, minus_node = 0;
  ArgmaxSet argmax;
};

DanskinResult danskin_both(const MapField& u, const Hamiltonian& H, const MapField& phi,
                           const Subdomain& omega, double delta = -1.0);
double danskin_derivative(const MapField& u, const Hamiltonian& H, const MapField& phi,
                          const Subdomain& omega, Side side, double delta = -1.0);

struct ConvexVerdict {
  bool pass = false;
  double slope_minus = 0.0, slope_plus = 0.0;
  double f0 = 0.0, f_min = 0.0;
};

/// Samples (t, f(t)) including t = 0 and points on both sides.
ConvexVerdict convex_min_check(std::vector<std::pair<double, double>> samples, double tol = 1e-12);

}  // namespace linfvar
