#include "linfvar/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "linfvar/errors.hpp"

namespace linfvar {

NodeEvaluation evaluate_node(const MapField& u, const Hamiltonian& H, const DomainBox& box,
                             NodeIndex node) {
  NodeEvaluation e;
  e.node = node;
  e.u = map_jet(u, box, node);
  e.H = hamiltonian_jet(H, e.u.x, e.u.value, e.u.gradient);
  if (!std::isfinite(e.H.value))
    throw SingularityError("non-finite energy density at node " + std::to_string(node));
  return e;
}

std::vector<double> density_values(const MapField& u, const Hamiltonian& H, const Subdomain& omega) {
  if (omega.closure().empty()) throw InputError("subdomain has no evaluable nodes");
  const DomainBox& box = omega.parent();
  std::vector<double> out;
  out.reserve(omega.closure().size());
  for (NodeIndex node : omega.closure()) {
    const Jet2 j = map_jet(u, box, node);
    const double v = H.value(j.x, j.value, j.gradient);
    if (!std::isfinite(v)) throw SingularityError("non-finite energy density at node " + std::to_string(node));
    out.push_back(v);
  }
  return out;
}

double sup_energy(const MapField& u, const Hamiltonian& H, const Subdomain& omega) {
  const auto v = density_values(u, H, omega);
  return *std::max_element(v.begin(), v.end());
}

double default_delta(double sup_value) { return 1e-7 * (1.0 + std::abs(sup_value)); }

ArgmaxSet argmax_set(const MapField& u, const Hamiltonian& H, const Subdomain& omega, double delta) {
  const auto v = density_values(u, H, omega);
  ArgmaxSet a;
  a.sup_value = *std::max_element(v.begin(), v.end());
  a.min_value = *std::min_element(v.begin(), v.end());
  a.delta = delta < 0.0 ? default_delta(a.sup_value) : delta;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v[k] >= a.sup_value - a.delta) {
      a.nodes.push_back(omega.closure()[k]);
      a.values.push_back(v[k]);
    }
  return a;
}

double linearized_density(const NodeEvaluation& at, const Jet2& phi) {
  return (at.H.H_P.array() * phi.gradient.array()).sum() + at.H.H_eta.dot(phi.value);
}

DanskinResult danskin_both(const MapField& u, const Hamiltonian& H, const MapField& phi,
                           const Subdomain& omega, double delta) {
  if (phi.n() != u.n() || phi.N() != u.N()) throw InputError("variation shape differs from the map's");
  DanskinResult r;
  r.argmax = argmax_set(u, H, omega, delta);
  r.plus = -std::numeric_limits<double>::infinity();
  r.minus = std::numeric_limits<double>::infinity();
  const DomainBox& box = omega.parent();
  for (NodeIndex node : r.argmax.nodes) {
    const double g = linearized_density(evaluate_node(u, H, box, node), map_jet(phi, box, node));
    if (g > r.plus) {
      r.plus = g;
      r.plus_node = node;
    }
    if (g < r.minus) {
      r.minus = g;
      r.minus_node = node;
    }
  }
  return r;
}

double danskin_derivative(const MapField& u, const Hamiltonian& H, const MapField& phi,
                          const Subdomain& omega, Side side, double delta) {
  const DanskinResult r = danskin_both(u, H, phi, omega, delta);
  return side == Side::Plus ? r.plus : r.minus;
}

ConvexVerdict convex_min_check(std::vector<std::pair<double, double>> samples, double tol) {
  if (samples.size() < 3) throw InputError("convexity check needs at least 3 samples");
  std::sort(samples.begin(), samples.end());
  const auto zero = std::find_if(samples.begin(), samples.end(), [](const auto& s) { return s.first == 0.0; });
  if (zero == samples.end()) throw InputError("convexity check needs the sample t = 0");
  if (zero == samples.begin() || zero + 1 == samples.end())
    throw InputError("convexity check needs samples on both sides of 0");
  ConvexVerdict v;
  v.f0 = zero->second;
  const auto& left = *(zero - 1);
  const auto& right = *(zero + 1);
  v.slope_minus = (v.f0 - left.second) / (0.0 - left.first);
  v.slope_plus = (right.second - v.f0) / right.first;
  v.f_min = std::min_element(samples.begin(), samples.end(),
                             [](const auto& a, const auto& b) { return a.second < b.second; })
                ->second;
  v.pass = v.slope_minus <= tol && v.slope_plus >= -tol && v.f0 <= v.f_min + tol;
  return v;
}

}  // namespace linfvar
