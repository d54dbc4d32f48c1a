#include "linfvar/operators.hpp"

#include <cmath>
#include <map>
#include <optional>

#include "linfvar/errors.hpp"

namespace linfvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Jet2 jet_at(const MapField& u, const EvalSite& site) {
  return site.on_grid() ? u.jet_at_node(*site.box, site.node) : u.jet(site.x);
}

/// Lazily evaluated matrix field on grid nodes; nodes that fail to evaluate
/// are unusable.
class NodeCache {
 public:
  explicit NodeCache(std::function<MatrixXd(NodeIndex)> f) : f_(std::move(f)) {}
  const std::optional<MatrixXd>& get(NodeIndex node) {
    auto it = cache_.find(node);
    if (it != cache_.end()) return it->second;
    std::optional<MatrixXd> v;
    try {
      MatrixXd m = f_(node);
      if (m.allFinite()) v = std::move(m);
    } catch (const SingularityError&) {
    } catch (const DomainError&) {
    }
    return cache_.emplace(node, std::move(v)).first->second;
  }

 private:
  std::function<MatrixXd(NodeIndex)> f_;
  std::map<NodeIndex, std::optional<MatrixXd>> cache_;
};

double default_eps(const EvalSite& site, const OperatorOptions& opts) {
  if (opts.eps > 0.0) return opts.eps;
  if (site.on_grid()) return 2.0 * site.box->max_spacing();
  return 1e-2 * (1.0 + site.x.norm());
}

std::vector<MatrixXd> neighbour_samples(const EvalSite& site, double eps, NodeCache& cache) {
  const DomainBox& box = *site.box;
  const int n = box.dim();
  const auto center = box.multi_index(site.node);
  std::vector<int> reach(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    reach[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(eps / box.spacing(i) + 1e-9));
  std::vector<MatrixXd> out;
  std::vector<int> off(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) off[static_cast<std::size_t>(i)] = -reach[static_cast<std::size_t>(i)];
  while (true) {
    bool self = true, inside = true;
    double dist2 = 0.0;
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(i);
      if (off[s] != 0) self = false;
      idx[s] = center[s] + off[s];
      if (idx[s] < 0 || idx[s] >= box.resolution()[s]) inside = false;
      dist2 += std::pow(off[s] * box.spacing(i), 2);
    }
    if (!self && inside && dist2 <= eps * eps * (1 + 1e-12)) {
      const auto& v = cache.get(box.linear_index(idx));
      if (v) out.push_back(*v);
    }
    int a = 0;
    for (; a < n; ++a) {
      const auto s = static_cast<std::size_t>(a);
      if (++off[s] <= reach[s]) break;
      off[s] = -reach[s];
    }
    if (a == n) break;
  }
  return out;
}

}  // namespace

VectorXd composite_gradient(const Jet2& j, const HamiltonianJet& h) {
  const int n = j.n();
  VectorXd g(n);
  for (int i = 0; i < n; ++i) {
    double s = h.H_x[i] + h.H_eta.dot(j.gradient.col(i));
    for (int a = 0; a < j.N(); ++a) s += h.H_P.row(a).dot(j.hessian[static_cast<std::size_t>(a)].row(i));
    g[i] = s;
  }
  return g;
}

VectorXd composite_gradient(const MapField& u, const Hamiltonian& H, const EvalSite& site) {
  const Jet2 j = jet_at(u, site);
  return composite_gradient(j, H.jet(j.x, j.value, j.gradient));
}

MatrixXd hp_field(const MapField& u, const Hamiltonian& H, const VectorXd& x) {
  const Jet2 j = u.jet(x);
  return H.jet(j.x, j.value, j.gradient).H_P;
}

VectorXd divergence_hp(const MapField& u, const Hamiltonian& H, const EvalSite& site,
                       const OperatorOptions& opts) {
  const int n = u.n(), N = u.N();
  VectorXd div = VectorXd::Zero(N);
  const bool use_grid = site.on_grid() && (!u.evaluable_anywhere() || opts.grid_divergence);
  if (use_grid) {
    const DomainBox& box = *site.box;
    NodeCache cache([&](NodeIndex k) {
      const Jet2 j = u.jet_at_node(box, k);
      return H.jet(j.x, j.value, j.gradient).H_P;
    });
    if (!cache.get(site.node)) throw SingularityError("H_P not evaluable at node " + std::to_string(site.node));
    auto usable = [&](NodeIndex k) { return cache.get(k).has_value(); };
    for (int i = 0; i < n; ++i)
      for (auto [off, c] : first_derivative_stencil(box, site.node, i, usable))
        div += c * cache.get(static_cast<NodeIndex>(box.neighbour(site.node, i, off)))->col(i);
    return div;
  }
  if (!u.evaluable_anywhere()) throw InputError("grid maps need a grid node site for the divergence");
  const double h = opts.h_div > 0.0 ? opts.h_div : 1e-5 * (1.0 + site.x.norm());
  for (int i = 0; i < n; ++i) {
    VectorXd xp = site.x, xm = site.x;
    xp[i] += h;
    xm[i] -= h;
    div += (hp_field(u, H, xp).col(i) - hp_field(u, H, xm).col(i)) / (2.0 * h);
  }
  return div;
}

ProjectionReport normal_projection(const std::function<MatrixXd(const VectorXd&)>& at_point,
                                   const std::function<MatrixXd(NodeIndex)>& at_node,
                                   const EvalSite& site, const OperatorOptions& opts) {
  const MatrixXd Vx = site.on_grid() ? at_node(site.node) : at_point(site.x);
  if (opts.variant == Variant::Full) return proj_range_complement(Vx, opts.rel_tol);
  const double eps = default_eps(site, opts);
  if (site.on_grid() && !at_point) {
    const ProjectionReport at_x = proj_range_complement(Vx, opts.rel_tol);
    if (at_x.basis.cols() == 0) return at_x;
    NodeCache cache(at_node);
    const auto samples = neighbour_samples(site, eps, cache);
    if (samples.empty()) throw SingularityError("no usable neighbours for the reduced projection");
    const double tol_angle = opts.tol_angle < 0.0 ? 1e-6 * eps : opts.tol_angle;
    return reduced_nullspace_from_samples(Vx, samples, opts.rel_tol, tol_angle);
  }
  ReducedOptions r;
  r.eps = eps;
  r.samples = opts.samples;
  r.rel_tol = opts.rel_tol;
  r.tol_angle = opts.tol_angle;
  return reduced_nullspace_proj(at_point, site.x, r);
}

namespace {

ProjectionReport projection_for(const MapField& u, const EvalSite& site, const OperatorOptions& opts,
                                const std::function<MatrixXd(const Jet2&)>& field) {
  std::function<MatrixXd(const VectorXd&)> at_point;
  if (u.evaluable_anywhere()) at_point = [&](const VectorXd& y) { return field(u.jet(y)); };
  std::function<MatrixXd(NodeIndex)> at_node;
  if (site.on_grid()) at_node = [&](NodeIndex k) { return field(u.jet_at_node(*site.box, k)); };
  return normal_projection(at_point, at_node, site, opts);
}

}  // namespace

SplitResiduals split_residuals(const MapField& u, const Hamiltonian& H, const EvalSite& site,
                               const OperatorOptions& opts) {
  const Jet2 j = jet_at(u, site);
  const HamiltonianJet h = H.jet(j.x, j.value, j.gradient);
  SplitResiduals s;
  s.density = h.value;
  s.tangential = h.H_P * composite_gradient(j, h);
  const VectorXd div = divergence_hp(u, H, site, opts);
  const ProjectionReport pi = projection_for(u, site, opts, [&](const Jet2& k) {
    return H.jet(k.x, k.value, k.gradient).H_P;
  });
  s.rank_discontinuity = pi.rank_discontinuity;
  s.normal_unscaled = pi.projection * (div - h.H_eta);
  s.normal = h.value * s.normal_unscaled;
  return s;
}

AronssonResidual aronsson_residual(const MapField& u, const Hamiltonian& H, const EvalSite& site,
                                   const OperatorOptions& opts) {
  const SplitResiduals s = split_residuals(u, H, site, opts);
  AronssonResidual r;
  r.variant = opts.variant;
  r.tangential = s.tangential;
  r.normal = s.normal;
  r.total = s.tangential + s.normal;
  r.tangential_norm = r.tangential.norm();
  r.normal_norm = r.normal.norm();
  r.total_norm = r.total.norm();
  r.rank_discontinuity = s.rank_discontinuity;
  const Jet2 j = jet_at(u, site);
  r.rank = numerical_rank(H.jet(j.x, j.value, j.gradient).H_P, opts.rel_tol);
  return r;
}

VectorXd infinity_laplacian_residual(const MapField& u, const EvalSite& site, const OperatorOptions& opts) {
  const Jet2 j = jet_at(u, site);
  const int n = j.n();
  VectorXd grad_sq(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int a = 0; a < j.N(); ++a) s += j.gradient.row(a).dot(j.hessian[static_cast<std::size_t>(a)].row(i));
    grad_sq[i] = 2.0 * s;
  }
  const ProjectionReport pi = projection_for(u, site, opts, [](const Jet2& k) { return k.gradient; });
  return j.gradient * grad_sq + j.gradient.squaredNorm() * (pi.projection * j.laplacian());
}

}  // namespace linfvar
