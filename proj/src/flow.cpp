#include "linfvar/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "linfvar/energy.hpp"
#include "linfvar/errors.hpp"
#include "linfvar/operators.hpp"

namespace linfvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd flow_velocity(const MapField& u, const Hamiltonian& H, const VectorXd& xi, const VectorXd& y) {
  const Jet2 j = u.jet(y);
  return H.jet(j.x, j.value, j.gradient).H_P.transpose() * xi;
}

bool inside_closure(const Subdomain& omega, const VectorXd& y) {
  const double slack = 1e-12 * (1.0 + omega.diameter());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] < omega.lower()[i] - slack || y[i] > omega.upper()[i] + slack) return false;
  if (omega.is_box()) return true;
  const DomainBox& box = omega.parent();
  std::vector<int> idx(static_cast<std::size_t>(box.dim()));
  for (int i = 0; i < box.dim(); ++i) {
    const int k = static_cast<int>(std::lround((y[i] - box.lo()[i]) / box.spacing(i)));
    idx[static_cast<std::size_t>(i)] = std::clamp(k, 0, box.resolution()[static_cast<std::size_t>(i)] - 1);
  }
  const NodeIndex node = box.linear_index(idx);
  return omega.masked(node) && !omega.singular(node);
}

namespace {

VectorXd unit(const VectorXd& xi) {
  const double nrm = xi.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw InputError("direction xi must be nonzero");
  return xi / nrm;
}

VectorXd rk4(const MapField& u, const Hamiltonian& H, const VectorXd& xi, const VectorXd& y, double s) {
  const VectorXd k1 = flow_velocity(u, H, xi, y);
  const VectorXd k2 = flow_velocity(u, H, xi, y + 0.5 * s * k1);
  const VectorXd k3 = flow_velocity(u, H, xi, y + 0.5 * s * k2);
  const VectorXd k4 = flow_velocity(u, H, xi, y + s * k3);
  return y + (s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void record(Trajectory& tr, const MapField& u, const Hamiltonian& H, const VectorXd& xi, double t,
            const VectorXd& y) {
  const Jet2 j = u.jet(y);
  const HamiltonianJet h = H.jet(j.x, j.value, j.gradient);
  tr.times.push_back(t);
  tr.points.push_back(y);
  tr.H_values.push_back(h.value);
  tr.xi_u.push_back(xi.dot(j.value));
  tr.speed_sq.push_back((h.H_P.transpose() * xi).squaredNorm());
}

}  // namespace

ExitBound exit_time_bound(const MapField& u, const Hamiltonian& H, const VectorXd& xi_in,
                          const Subdomain& omega, double c0) {
  const VectorXd xi = unit(xi_in);
  ExitBound b;
  b.c1 = std::numeric_limits<double>::infinity();
  for (NodeIndex node : omega.closure()) {
    const NodeEvaluation e = evaluate_node(u, H, omega.parent(), node);
    b.du_sup = std::max(b.du_sup, e.u.gradient.norm());
    b.c1 = std::min(b.c1, (e.H.H_P.transpose() * xi).norm());
  }
  b.diameter = omega.diameter();
  b.estimable = c0 > 0.0 && b.c1 > 0.0 && std::isfinite(b.c1);
  if (b.estimable) b.bound = b.du_sup * b.diameter / (c0 * b.c1 * b.c1);
  return b;
}

Trajectory integrate_flow(const MapField& u, const Hamiltonian& H, const VectorXd& x0,
                          const VectorXd& xi_in, const Subdomain& omega, const FlowOptions& opts) {
  if (!u.evaluable_anywhere()) throw InputError("the flow needs a map that evaluates between nodes");
  if (xi_in.size() != u.N()) throw InputError("direction xi must have N components");
  if (x0.size() != u.n()) throw InputError("starting point has the wrong dimension");
  const VectorXd xi = unit(xi_in);
  if (!inside_closure(omega, x0)) throw InputError("starting point lies outside the subdomain");

  double dt = opts.dt;
  if (!(dt > 0.0)) {
    double vmax = 0.0;
    for (NodeIndex node : omega.closure())
      vmax = std::max(vmax, flow_velocity(u, H, xi, omega.parent().coordinates(node)).norm());
    if (!(vmax > 0.0)) throw InputError("flow field vanishes on the subdomain");
    dt = omega.parent().max_spacing() / (4.0 * vmax);
  }
  double t_max = opts.t_max;
  if (!(t_max > 0.0)) {
    const ExitBound b = exit_time_bound(u, H, xi, omega, opts.c0);
    t_max = b.estimable ? 10.0 * b.bound : 1e3 * dt;
  }

  Trajectory tr;
  VectorXd y = x0;
  double t = 0.0;
  record(tr, u, H, xi, t, y);
  while (t < t_max) {
    const double step = std::min(dt, t_max - t);
    const VectorXd next = rk4(u, H, xi, y, step);
    if (inside_closure(omega, next)) {
      t += step;
      y = next;
      record(tr, u, H, xi, t, y);
      continue;
    }
    double lo = 0.0, hi = step;
    while (hi - lo > dt * 1e-6) {
      const double mid = 0.5 * (lo + hi);
      if (inside_closure(omega, rk4(u, H, xi, y, mid)))
        lo = mid;
      else
        hi = mid;
    }
    VectorXd exit = rk4(u, H, xi, y, hi);
    exit = exit.cwiseMax(omega.lower()).cwiseMin(omega.upper());
    tr.exited = true;
    tr.exit_time = t + hi;
    tr.exit_point = exit;
    record(tr, u, H, xi, t + hi, exit);
    break;
  }
  return tr;
}

FlowIdentityReport check_flow_identities(const Trajectory& tr, const MapField& u, const Hamiltonian& H,
                                         const VectorXd& xi_in, double c) {
  const VectorXd xi = unit(xi_in);
  FlowIdentityReport r;
  r.monotonicity_margin = std::numeric_limits<double>::infinity();
  const std::size_t m = tr.times.size();
  for (std::size_t k = 1; k < m; ++k) {
    const double dt = tr.times[k] - tr.times[k - 1];
    r.max_dt = std::max(r.max_dt, dt);
    const double inc = tr.xi_u[k] - tr.xi_u[k - 1];
    r.monotonicity_margin =
        std::min(r.monotonicity_margin, inc - c * dt * 0.5 * (tr.speed_sq[k] + tr.speed_sq[k - 1]));
  }
  if (m < 2) r.monotonicity_margin = 0.0;
  for (std::size_t k = 1; k < m; ++k)
    r.drift_rate = std::max(r.drift_rate, std::abs(tr.H_values[k] - tr.H_values[0]) /
                                              std::max(tr.times[k], r.max_dt));
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const double lhs = (tr.H_values[k + 1] - tr.H_values[k - 1]) / (tr.times[k + 1] - tr.times[k - 1]);
    const Jet2 j = u.jet(tr.points[k]);
    const HamiltonianJet h = H.jet(j.x, j.value, j.gradient);
    const double rhs = xi.dot(h.H_P * composite_gradient(j, h));
    r.energy_derivative_defect = std::max(r.energy_derivative_defect, std::abs(lhs - rhs));
  }
  return r;
}

StructuralVerdict check_structural_condition(const Hamiltonian& H, double c, int sample_count,
                                             const SamplingBox& box, std::uint64_t seed) {
  if (sample_count < 1) throw InputError("structural check needs at least one sample");
  const int n = H.n(), N = H.N();
  VectorXd lo = box.x_lo.size() == n ? box.x_lo : VectorXd::Constant(n, -1.0);
  VectorXd hi = box.x_hi.size() == n ? box.x_hi : VectorXd::Constant(n, 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  StructuralVerdict v;
  v.worst_margin = std::numeric_limits<double>::infinity();
  for (int s = 0; s < sample_count; ++s) {
    VectorXd x(n), eta(N), xi(N);
    MatrixXd P(N, n);
    for (int i = 0; i < n; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * unit01(rng);
    for (int a = 0; a < N; ++a) eta[a] = box.eta_radius * (2.0 * unit01(rng) - 1.0);
    for (int a = 0; a < N; ++a)
      for (int i = 0; i < n; ++i) P(a, i) = box.p_radius * (2.0 * unit01(rng) - 1.0);
    do {
      for (int a = 0; a < N; ++a) xi[a] = gauss(rng);
    } while (xi.norm() == 0.0);
    xi.normalize();
    HamiltonianJet h;
    try {
      h = H.jet(x, eta, P);
    } catch (const SingularityError&) {
      continue;
    } catch (const DomainError&) {
      continue;
    }
    const VectorXd a = h.H_P.transpose() * xi;
    const VectorXd b = P.transpose() * xi;
    const double margin = a.dot(b) - c * a.squaredNorm();
    ++v.samples;
    if (margin < v.worst_margin) {
      v.worst_margin = margin;
      v.worst_xi = xi;
      v.worst_x = x;
      v.worst_eta = eta;
      v.worst_P = P;
    }
  }
  if (v.samples == 0) throw NumericalError("no structural-condition sample could be evaluated");
  v.pass = v.worst_margin >= -1e-12;
  return v;
}

MaxMinReport verify_maxmin(const MapField& u, const Hamiltonian& H, const Subdomain& omega) {
  if (omega.boundary().empty()) throw InputError("subdomain has no boundary nodes");
  if (omega.interior().empty()) throw InputError("subdomain has no interior nodes");
  const DomainBox& box = omega.parent();
  const auto values = density_values(u, H, omega);
  std::vector<double> at(box.node_count(), std::nan(""));
  MaxMinReport r;
  r.sup_interior = r.max_boundary = -std::numeric_limits<double>::infinity();
  r.inf_interior = r.min_boundary = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < values.size(); ++k) {
    const NodeIndex node = omega.closure()[k];
    at[node] = values[k];
    if (omega.is_boundary(node)) {
      r.max_boundary = std::max(r.max_boundary, values[k]);
      r.min_boundary = std::min(r.min_boundary, values[k]);
    } else {
      r.sup_interior = std::max(r.sup_interior, values[k]);
      r.inf_interior = std::min(r.inf_interior, values[k]);
    }
  }
  for (NodeIndex node : omega.closure())
    for (int i = 0; i < box.dim(); ++i) {
      const long nb = box.neighbour(node, i, 1);
      if (nb < 0 || std::isnan(at[static_cast<std::size_t>(nb)])) continue;
      r.lipschitz = std::max(r.lipschitz, std::abs(at[static_cast<std::size_t>(nb)] - at[node]) / box.spacing(i));
    }
  r.tol_grid = r.lipschitz * box.max_spacing();
  r.max_principle = r.sup_interior <= r.max_boundary + r.tol_grid;
  r.min_principle = r.inf_interior >= r.min_boundary - r.tol_grid;
  r.pass = r.max_principle && r.min_principle;
  return r;
}

std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  os.precision(17);
  const auto n = tr.points.empty() ? 0 : tr.points.front().size();
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",gamma_" << i;
  os << ",H\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << tr.times[k];
    for (Eigen::Index i = 0; i < n; ++i) os << "," << tr.points[k][i];
    os << "," << tr.H_values[k] << "\n";
  }
  return os.str();
}

}  // namespace linfvar
