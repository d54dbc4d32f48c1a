#include "linfvar/lp_approx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "linfvar/energy.hpp"
#include "linfvar/errors.hpp"
#include "linfvar/operators.hpp"

namespace linfvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Element {
  std::vector<NodeIndex> verts;
  VectorXd x;
  double vol = 0.0;
  MatrixXd B;  // z = (eta, P row-major) = B * local values
};

struct Mesh {
  int n = 1, N = 1;
  std::vector<Element> elements;
  std::vector<long> dof;  // parent node -> free node index, -1 when fixed
  std::vector<NodeIndex> free_nodes;
  std::vector<double> lumped;
  double measure = 0.0;
};

Mesh build_mesh(const Subdomain& omega, int N) {
  const DomainBox& box = omega.parent();
  const int n = box.dim();
  Mesh mesh;
  mesh.n = n;
  mesh.N = N;
  std::vector<char> usable(box.node_count(), 0);
  for (NodeIndex node : omega.closure()) usable[node] = 1;
  mesh.dof.assign(box.node_count(), -1);
  for (NodeIndex node : omega.interior()) {
    mesh.dof[node] = static_cast<long>(mesh.free_nodes.size());
    mesh.free_nodes.push_back(node);
  }
  mesh.lumped.assign(mesh.free_nodes.size(), 0.0);

  double cell_vol = 1.0;
  for (int i = 0; i < n; ++i) cell_vol *= box.spacing(i);
  double factorial = 1.0;
  for (int i = 2; i <= n; ++i) factorial *= i;
  const double vol = cell_vol / factorial;

  std::vector<int> perm(static_cast<std::size_t>(n));
  for (NodeIndex c = 0; c < box.node_count(); ++c) {
    const auto idx = box.multi_index(c);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      if (idx[static_cast<std::size_t>(i)] + 1 >= box.resolution()[static_cast<std::size_t>(i)]) ok = false;
    if (!ok) continue;
    // Every corner of the cell must be usable.
    for (unsigned mask = 0; mask < (1u << n) && ok; ++mask) {
      NodeIndex v = c;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) v = static_cast<NodeIndex>(box.neighbour(v, i, 1));
      if (!usable[v]) ok = false;
    }
    if (!ok) continue;
    std::iota(perm.begin(), perm.end(), 0);
    do {
      Element e;
      e.vol = vol;
      e.verts.push_back(c);
      for (int k = 0; k < n; ++k)
        e.verts.push_back(static_cast<NodeIndex>(box.neighbour(e.verts.back(), perm[static_cast<std::size_t>(k)], 1)));
      e.x = VectorXd::Zero(n);
      for (NodeIndex v : e.verts) e.x += box.coordinates(v);
      e.x /= static_cast<double>(n + 1);
      e.B = MatrixXd::Zero(N + N * n, (n + 1) * N);
      for (int a = 0; a < N; ++a) {
        for (int v = 0; v <= n; ++v) e.B(a, v * N + a) = 1.0 / (n + 1);
        for (int k = 1; k <= n; ++k) {
          const int axis = perm[static_cast<std::size_t>(k - 1)];
          const double h = box.spacing(axis);
          e.B(N + a * n + axis, k * N + a) += 1.0 / h;
          e.B(N + a * n + axis, (k - 1) * N + a) -= 1.0 / h;
        }
      }
      for (NodeIndex v : e.verts)
        if (mesh.dof[v] >= 0) mesh.lumped[static_cast<std::size_t>(mesh.dof[v])] += vol / (n + 1);
      mesh.measure += vol;
      mesh.elements.push_back(std::move(e));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  if (mesh.elements.empty()) throw InputError("subdomain contains no complete grid cell");
  if (mesh.free_nodes.empty()) throw InputError("subdomain has no interior unknowns");
  return mesh;
}

class Objective {
 public:
  Objective(const Mesh& mesh, const Hamiltonian& H, double p) : mesh_(mesh), H_(H), p_(p) {}

  VectorXd local(const Element& e, const MatrixXd& U) const {
    VectorXd loc((mesh_.n + 1) * mesh_.N);
    for (std::size_t v = 0; v < e.verts.size(); ++v)
      for (int a = 0; a < mesh_.N; ++a)
        loc[static_cast<Eigen::Index>(v) * mesh_.N + a] = U(static_cast<Eigen::Index>(e.verts[v]), a);
    return loc;
  }

  void split(const VectorXd& z, VectorXd& eta, MatrixXd& P) const {
    const int N = mesh_.N, n = mesh_.n;
    eta = z.head(N);
    P.resize(N, n);
    for (int a = 0; a < N; ++a)
      for (int i = 0; i < n; ++i) P(a, i) = z[N + a * n + i];
  }

  double density(const Element& e, const MatrixXd& U) const {
    VectorXd eta;
    MatrixXd P;
    split(e.B * local(e, U), eta, P);
    const double h = H_.value(e.x, eta, P);
    if (h < 0.0) throw InputError("Hamiltonian is negative on a simplex; H^p is undefined");
    if (!std::isfinite(h)) throw NumericalError("non-finite energy density");
    return h;
  }

  double max_density(const MatrixXd& U) const {
    double m = 0.0;
    for (const auto& e : mesh_.elements) m = std::max(m, density(e, U));
    return m;
  }

  /// Σ |T| (H / M)^p.
  double scaled(const MatrixXd& U, double M) const {
    double s = 0.0;
    for (const auto& e : mesh_.elements) s += e.vol * std::pow(density(e, U) / M, p_);
    return s;
  }

  /// Gradient (and optionally Hessian) of Σ |T| (H / M)^p over the free values.
  double assemble(const MatrixXd& U, double M, VectorXd& grad, Eigen::SparseMatrix<double>* hess) const {
    const int N = mesh_.N;
    const auto dofs = static_cast<Eigen::Index>(mesh_.free_nodes.size()) * N;
    grad = VectorXd::Zero(dofs);
    std::vector<Eigen::Triplet<double>> trip;
    double total = 0.0;
    for (const auto& e : mesh_.elements) {
      VectorXd eta;
      MatrixXd P;
      split(e.B * local(e, U), eta, P);
      VectorXd gz;
      MatrixXd hz;
      double h = 0.0;
      if (hess) {
        const HamiltonianSecondJet s = H_.second_jet(e.x, eta, P);
        h = s.value;
        gz = s.grad;
        hz = s.hess;
      } else {
        const HamiltonianJet j = H_.jet(e.x, eta, P);
        h = j.value;
        gz.resize(N + N * mesh_.n);
        gz.head(N) = j.H_eta;
        for (int a = 0; a < N; ++a)
          for (int i = 0; i < mesh_.n; ++i) gz[N + a * mesh_.n + i] = j.H_P(a, i);
      }
      if (h < 0.0) throw InputError("Hamiltonian is negative on a simplex; H^p is undefined");
      const double r = h / M;
      total += e.vol * std::pow(r, p_);
      const double w1 = e.vol * p_ * std::pow(r, p_ - 1.0) / M;
      const VectorXd gl = e.B.transpose() * gz;
      MatrixXd hl;
      if (hess) {
        const double w2 = e.vol * p_ * (p_ - 1.0) * std::pow(r, p_ - 2.0) / (M * M);
        hl = e.B.transpose() * (w2 * gz * gz.transpose() + w1 * hz) * e.B;
      }
      for (std::size_t v = 0; v < e.verts.size(); ++v) {
        const long dv = mesh_.dof[e.verts[v]];
        if (dv < 0) continue;
        for (int a = 0; a < N; ++a) {
          const auto li = static_cast<Eigen::Index>(v) * N + a;
          grad[dv * N + a] += w1 * gl[li];
          if (!hess) continue;
          for (std::size_t w = 0; w < e.verts.size(); ++w) {
            const long dw = mesh_.dof[e.verts[w]];
            if (dw < 0) continue;
            for (int b = 0; b < N; ++b)
              trip.emplace_back(dv * N + a, dw * N + b, hl(li, static_cast<Eigen::Index>(w) * N + b));
          }
        }
      }
    }
    if (hess) {
      hess->resize(dofs, dofs);
      hess->setFromTriplets(trip.begin(), trip.end());
    }
    return total;
  }

 private:
  const Mesh& mesh_;
  const Hamiltonian& H_;
  double p_;
};

VectorXd boundary_value(const MapField& g, const DomainBox& box, NodeIndex node) {
  if (g.evaluable_anywhere()) return g.value(box.coordinates(node));
  return g.jet_at_node(box, node).value;
}

void add_free(MatrixXd& U, const Mesh& mesh, const VectorXd& d, double t) {
  for (std::size_t k = 0; k < mesh.free_nodes.size(); ++k)
    for (int a = 0; a < mesh.N; ++a)
      U(static_cast<Eigen::Index>(mesh.free_nodes[k]), a) += t * d[static_cast<Eigen::Index>(k) * mesh.N + a];
}

}  // namespace

MapField default_initial_guess(const LpProblem& prob) {
  const Subdomain& omega = prob.omega;
  const DomainBox& box = omega.parent();
  const int N = prob.boundary.N(), n = box.dim();
  MatrixXd U = MatrixXd::Constant(static_cast<Eigen::Index>(box.node_count()), N, std::nan(""));
  VectorXd mean = VectorXd::Zero(N);
  for (NodeIndex node : omega.boundary()) {
    const VectorXd g = boundary_value(prob.boundary, box, node);
    U.row(static_cast<Eigen::Index>(node)) = g.transpose();
    mean += g;
  }
  mean /= static_cast<double>(omega.boundary().size());

  // Bounding index box of the mask.
  std::vector<int> lo(static_cast<std::size_t>(n), 1 << 30), hi(static_cast<std::size_t>(n), -1);
  for (NodeIndex node : omega.closure()) {
    const auto idx = box.multi_index(node);
    for (int i = 0; i < n; ++i) {
      lo[static_cast<std::size_t>(i)] = std::min(lo[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i)]);
      hi[static_cast<std::size_t>(i)] = std::max(hi[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i)]);
    }
  }
  auto at = [&](std::vector<int> idx) -> VectorXd {
    return U.row(static_cast<Eigen::Index>(box.linear_index(idx))).transpose();
  };
  const bool box_like = omega.is_box() && omega.closure().size() == omega.interior().size() + omega.boundary().size();
  for (NodeIndex node : omega.interior()) {
    const auto idx = box.multi_index(node);
    VectorXd v = mean;
    if (box_like && n == 1) {
      const double s = static_cast<double>(idx[0] - lo[0]) / (hi[0] - lo[0]);
      const VectorXd a = at({lo[0]});
      v = a + s * (at({hi[0]}) - a);
    } else if (box_like && n == 2) {
      const int i = idx[0], j = idx[1];
      const double s = static_cast<double>(i - lo[0]) / (hi[0] - lo[0]);
      const double t = static_cast<double>(j - lo[1]) / (hi[1] - lo[1]);
      v = (1 - s) * at({lo[0], j}) + s * at({hi[0], j}) + (1 - t) * at({i, lo[1]}) + t * at({i, hi[1]}) -
          ((1 - s) * (1 - t) * at({lo[0], lo[1]}) + s * (1 - t) * at({hi[0], lo[1]}) +
           (1 - s) * t * at({lo[0], hi[1]}) + s * t * at({hi[0], hi[1]}));
    }
    if (!v.allFinite()) v = mean;
    U.row(static_cast<Eigen::Index>(node)) = v.transpose();
  }
  return MapField::grid(box, std::move(U));
}

LpResult lp_minimize(const LpProblem& prob, const MapField& init_in) {
  if (!(prob.p >= 2.0)) throw InputError("p must be at least 2");
  if (prob.boundary.empty()) throw InputError("L^p problem needs boundary data");
  const Subdomain& omega = prob.omega;
  const DomainBox& box = omega.parent();
  const int N = prob.boundary.N();
  if (prob.H.N() != N || prob.H.n() != box.dim()) throw InputError("Hamiltonian shape differs from the problem's");
  const Mesh mesh = build_mesh(omega, N);
  const Objective obj(mesh, prob.H, prob.p);
  const LpOptions& o = prob.opts;

  // Fixed values everywhere off the unknowns; interior values from init.
  MatrixXd U = MatrixXd::Constant(static_cast<Eigen::Index>(box.node_count()), N, std::nan(""));
  for (NodeIndex node = 0; node < box.node_count(); ++node) {
    if (mesh.dof[node] >= 0 || omega.singular(node)) continue;
    try {
      U.row(static_cast<Eigen::Index>(node)) = boundary_value(prob.boundary, box, node).transpose();
    } catch (const SingularityError&) {
    } catch (const DomainError&) {
    }
  }
  const MapField init = init_in.empty() ? default_initial_guess(prob) : init_in;
  for (NodeIndex node : omega.boundary()) {
    const VectorXd g = U.row(static_cast<Eigen::Index>(node)).transpose();
    const VectorXd v = boundary_value(init, box, node);
    if ((g - v).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + g.cwiseAbs().maxCoeff()))
      throw InputError("initial guess does not match the boundary data at node " + std::to_string(node));
  }
  for (NodeIndex node : mesh.free_nodes)
    U.row(static_cast<Eigen::Index>(node)) = boundary_value(init, box, node).transpose();

  LpResult res;
  res.measure = mesh.measure;
  auto grad_norm = [&](const VectorXd& g, double M, double phi) {
    if (phi <= 0.0) return 0.0;
    const double f = M * std::pow(phi, 1.0 / prob.p - 1.0) / prob.p;
    double m = 0.0;
    for (std::size_t k = 0; k < mesh.free_nodes.size(); ++k)
      for (int a = 0; a < N; ++a)
        m = std::max(m, std::abs(f * g[static_cast<Eigen::Index>(k) * N + a]) / mesh.lumped[k]);
    return m;
  };

  double gd_step = 1.0 / prob.p;
  for (int it = 0;; ++it) {
    const double M = obj.max_density(U);
    if (M == 0.0) {
      res.grad_norm = 0.0;
      res.converged = true;
      break;
    }
    VectorXd g;
    Eigen::SparseMatrix<double> K;
    const bool newton = o.step_rule == StepRule::Newton;
    const double phi = obj.assemble(U, M, g, newton ? &K : nullptr);
    res.grad_norm = grad_norm(g, M, phi);
    if (res.grad_norm <= o.tol_opt) {
      res.converged = true;
      break;
    }
    if (it >= o.max_iters) break;

    VectorXd gd(g.size());
    for (std::size_t k = 0; k < mesh.free_nodes.size(); ++k)
      for (int a = 0; a < N; ++a) {
        const auto i = static_cast<Eigen::Index>(k) * N + a;
        gd[i] = -g[i] / mesh.lumped[k];
      }

    std::vector<std::pair<VectorXd, double>> candidates;  // (direction, first step)
    if (newton) {
      const double diag = K.diagonal().cwiseAbs().maxCoeff();
      Eigen::SparseMatrix<double> I(K.rows(), K.cols());
      I.setIdentity();
      for (double mu : {0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0}) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K + (mu * diag) * I);
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) continue;
        VectorXd d = ldlt.solve(-g);
        if (ldlt.info() == Eigen::Success && d.allFinite() && d.dot(g) < 0.0) {
          candidates.emplace_back(std::move(d), 1.0);
          break;
        }
      }
    }
    candidates.emplace_back(gd, gd_step);

    bool accepted = false;
    for (const auto& [d, t0] : candidates) {
      const double slope = g.dot(d);
      double t = t0;
      for (int b = 0; b <= o.max_backtracks; ++b, t *= 0.5) {
        MatrixXd trial = U;
        add_free(trial, mesh, d, t);
        double phi_t;
        try {
          phi_t = obj.scaled(trial, M);
        } catch (const NumericalError&) {
          continue;
        }
        if (std::isfinite(phi_t) && phi_t <= phi + o.armijo_c * t * slope && phi_t <= phi) {
          U = std::move(trial);
          res.energy_history.push_back(std::pow(M, prob.p) * phi_t);
          if (&d == &candidates.back().first) gd_step = std::min(4.0 * t, 1e6);
          accepted = true;
          break;
        }
      }
      if (accepted) break;
    }
    if (!accepted) {
      res.stalled = true;
      if (res.grad_norm > 1e3 * o.tol_opt) throw NumericalError("L^p descent: line search exhausted");
      break;
    }
    ++res.iters;
  }

  res.u = MapField::grid(box, U);
  res.element_sup = obj.max_density(U);
  const double phi = res.element_sup > 0.0 ? obj.scaled(U, res.element_sup) : 0.0;
  res.p_energy = std::pow(res.element_sup, prob.p) * phi;
  res.normalized_energy = res.element_sup * std::pow(phi, 1.0 / prob.p);
  res.E_inf = sup_energy(res.u, prob.H, omega);
  return res;
}

std::vector<LpStage> p_continuation(const LpProblem& base, const std::vector<double>& schedule,
                                    const MapField& init) {
  if (schedule.empty()) throw InputError("p schedule is empty");
  if (schedule.front() != 2.0) throw InputError("p schedule must start at 2");
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] > schedule[k - 1])) throw InputError("p schedule must be increasing");
  std::vector<LpStage> stages;
  MapField current = init;
  for (double p : schedule) {
    LpProblem prob = base;
    prob.p = p;
    LpStage s;
    s.p = p;
    s.result = lp_minimize(prob, current);
    s.E_inf = s.result.E_inf;
    OperatorOptions ops;
    ops.variant = Variant::Reduced;
    const DomainBox& box = base.omega.parent();
    for (NodeIndex node : base.omega.interior())
      s.aronsson_residual_norm = std::max(
          s.aronsson_residual_norm,
          aronsson_residual(s.result.u, base.H, EvalSite::at_node(box, node), ops).total_norm);
    current = s.result.u;
    stages.push_back(std::move(s));
  }
  return stages;
}

}  // namespace linfvar
