#include "linfvar/problem.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "linfvar/errors.hpp"

namespace linfvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Jet2 Jet2::zero(int n, int N, const VectorXd& x) {
  Jet2 j;
  j.x = x;
  j.value = VectorXd::Zero(N);
  j.gradient = MatrixXd::Zero(N, n);
  j.hessian.assign(static_cast<std::size_t>(N), MatrixXd::Zero(n, n));
  return j;
}

Jet2& Jet2::axpy(double t, const Jet2& other) {
  if (other.N() != N() || other.n() != n()) throw InputError("jet shapes differ");
  value += t * other.value;
  gradient += t * other.gradient;
  for (std::size_t a = 0; a < hessian.size(); ++a) hessian[a] += t * other.hessian[a];
  return *this;
}

VectorXd Jet2::laplacian() const {
  VectorXd lap(N());
  for (int a = 0; a < N(); ++a) lap[a] = hessian[static_cast<std::size_t>(a)].trace();
  return lap;
}

// ---------------------------------------------------------------- Hamiltonian

Hamiltonian::Hamiltonian(int n, int N, std::optional<expr::Ast> ast)
    : n_(n), N_(N), ast_(std::move(ast)) {
  if (n < 1 || N < 1) throw InputError("Hamiltonian dimensions must be positive");
  if (ast_) {
    depends_x_ = ast_->uses(expr::VarKind::X);
    depends_eta_ = ast_->uses(expr::VarKind::Eta) || ast_->uses(expr::VarKind::U);
    depends_p_ = ast_->uses(expr::VarKind::P);
  }
}

Hamiltonian Hamiltonian::dirichlet(int n, int N) { return Hamiltonian(n, N, std::nullopt); }

Hamiltonian Hamiltonian::from_ast(expr::Ast ast) {
  const auto d = ast.dims();
  return Hamiltonian(d.n, d.N, std::move(ast));
}

Hamiltonian Hamiltonian::parse(std::string_view src, int n, int N) {
  if (src == "dirichlet") return dirichlet(n, N);
  return from_ast(expr::parse(src, expr::Dims{n, N}));
}

std::string Hamiltonian::describe() const { return ast_ ? expr::print(*ast_) : "dirichlet"; }

void Hamiltonian::bind(const VectorXd& x, const VectorXd& eta, const MatrixXd& P,
                       std::vector<double>& slots) const {
  if (x.size() != n_ || eta.size() != N_ || P.rows() != N_ || P.cols() != n_)
    throw InputError("Hamiltonian arguments have the wrong shape");
  const expr::VariableLayout layout(expr::Dims{n_, N_});
  slots.assign(static_cast<std::size_t>(layout.size()), 0.0);
  for (int i = 1; i <= n_; ++i) slots[static_cast<std::size_t>(layout.x_slot(i))] = x[i - 1];
  for (int a = 1; a <= N_; ++a) {
    slots[static_cast<std::size_t>(layout.eta_slot(a))] = eta[a - 1];
    for (int i = 1; i <= n_; ++i)
      slots[static_cast<std::size_t>(layout.p_slot(a, i))] = P(a - 1, i - 1);
  }
}

double Hamiltonian::value(const VectorXd& x, const VectorXd& eta, const MatrixXd& P) const {
  if (!ast_) {
    if (P.rows() != N_ || P.cols() != n_) throw InputError("Hamiltonian arguments have the wrong shape");
    return P.squaredNorm();
  }
  std::vector<double> slots;
  bind(x, eta, P, slots);
  return expr::evaluate(*ast_, slots);
}

HamiltonianJet Hamiltonian::jet(const VectorXd& x, const VectorXd& eta, const MatrixXd& P) const {
  HamiltonianJet j;
  if (!ast_) {
    if (P.rows() != N_ || P.cols() != n_) throw InputError("Hamiltonian arguments have the wrong shape");
    j.value = P.squaredNorm();
    j.H_x = VectorXd::Zero(n_);
    j.H_eta = VectorXd::Zero(N_);
    j.H_P = 2.0 * P;
    return j;
  }
  std::vector<double> slots;
  bind(x, eta, P, slots);
  std::vector<int> seeds(slots.size());
  std::iota(seeds.begin(), seeds.end(), 0);
  const Dual1 d = expr::eval_jet1(*ast_, slots, seeds);
  const expr::VariableLayout layout(expr::Dims{n_, N_});
  j.value = d.value;
  j.H_x = d.grad.head(n_);
  j.H_eta = d.grad.segment(n_, N_);
  j.H_P.resize(N_, n_);
  for (int a = 1; a <= N_; ++a)
    for (int i = 1; i <= n_; ++i) j.H_P(a - 1, i - 1) = d.grad[layout.p_slot(a, i)];
  return j;
}

HamiltonianSecondJet Hamiltonian::second_jet(const VectorXd& x, const VectorXd& eta,
                                             const MatrixXd& P) const {
  const int m = N_ + N_ * n_;
  HamiltonianSecondJet s;
  if (!ast_) {
    s.value = P.squaredNorm();
    s.grad = VectorXd::Zero(m);
    s.hess = MatrixXd::Zero(m, m);
    for (int a = 0; a < N_; ++a)
      for (int i = 0; i < n_; ++i) {
        const int k = N_ + a * n_ + i;
        s.grad[k] = 2.0 * P(a, i);
        s.hess(k, k) = 2.0;
      }
    return s;
  }
  std::vector<double> slots;
  bind(x, eta, P, slots);
  // Slots n.. are exactly (eta, P row-major), the order of z.
  std::vector<int> seeds(static_cast<std::size_t>(m));
  std::iota(seeds.begin(), seeds.end(), n_);
  const Dual2 d = expr::eval_jet2(*ast_, slots, seeds);
  s.value = d.value;
  s.grad = d.grad;
  s.hess = d.hess;
  return s;
}

HamiltonianJet hamiltonian_jet(const Hamiltonian& H, const VectorXd& x, const VectorXd& eta,
                               const MatrixXd& P) {
  return H.jet(x, eta, P);
}

// ------------------------------------------------------------------- MapField

struct MapField::Impl {
  Kind kind = Kind::ClosedForm;
  int n = 1, N = 1;
  std::vector<expr::Ast> components;
  DomainBox box;
  MatrixXd samples;
  JetFunction fn;
  std::string description;
  std::vector<std::pair<double, MapField>> terms;
};

namespace {

bool row_finite(const MatrixXd& samples, NodeIndex node) {
  return samples.row(static_cast<Eigen::Index>(node)).allFinite();
}

using Stencil = std::vector<std::pair<int, double>>;

Stencil second_derivative_stencil(const DomainBox& box, NodeIndex node, int axis,
                                  const std::function<bool(NodeIndex)>& usable) {
  const double h2 = box.spacing(axis) * box.spacing(axis);
  auto ok = [&](int k) {
    const long nb = box.neighbour(node, axis, k);
    return nb >= 0 && usable(static_cast<NodeIndex>(nb));
  };
  if (ok(-1) && ok(1)) return {{-1, 1 / h2}, {0, -2 / h2}, {1, 1 / h2}};
  if (ok(1) && ok(2) && ok(3)) return {{0, 2 / h2}, {1, -5 / h2}, {2, 4 / h2}, {3, -1 / h2}};
  if (ok(-1) && ok(-2) && ok(-3)) return {{0, 2 / h2}, {-1, -5 / h2}, {-2, 4 / h2}, {-3, -1 / h2}};
  // Only three usable nodes along the axis: first-order one-sided.
  if (ok(1) && ok(2)) return {{0, 1 / h2}, {1, -2 / h2}, {2, 1 / h2}};
  if (ok(-1) && ok(-2)) return {{0, 1 / h2}, {-1, -2 / h2}, {-2, 1 / h2}};
  throw SingularityError("second-derivative stencil out of bounds at node " + std::to_string(node));
}

long shifted(const DomainBox& box, NodeIndex node, int axis_a, int a, int axis_b, int b) {
  const long m = box.neighbour(node, axis_a, a);
  if (m < 0) return -1;
  return box.neighbour(static_cast<NodeIndex>(m), axis_b, b);
}

Jet2 grid_jet(const DomainBox& box, const MatrixXd& samples, NodeIndex node) {
  if (node >= box.node_count()) throw InputError("grid node outside the grid");
  if (!row_finite(samples, node))
    throw SingularityError("grid map has non-finite samples at node " + std::to_string(node));
  const int n = box.dim();
  const int N = static_cast<int>(samples.cols());
  auto usable = [&](NodeIndex k) { return row_finite(samples, k); };
  auto row = [&](long k) { return samples.row(k).transpose(); };

  Jet2 j = Jet2::zero(n, N, box.coordinates(node));
  j.value = row(static_cast<long>(node));
  std::vector<Stencil> first(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    first[static_cast<std::size_t>(i)] = first_derivative_stencil(box, node, i, usable);
    VectorXd d = VectorXd::Zero(N);
    for (auto [off, c] : first[static_cast<std::size_t>(i)])
      d += c * row(box.neighbour(node, i, off));
    j.gradient.col(i) = d;

    VectorXd dd = VectorXd::Zero(N);
    for (auto [off, c] : second_derivative_stencil(box, node, i, usable))
      dd += c * row(box.neighbour(node, i, off));
    for (int a = 0; a < N; ++a) j.hessian[static_cast<std::size_t>(a)](i, i) = dd[a];
  }
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k) {
      VectorXd dd = VectorXd::Zero(N);
      for (auto [oi, ci] : first[static_cast<std::size_t>(i)])
        for (auto [ok, ck] : first[static_cast<std::size_t>(k)]) {
          const long m = shifted(box, node, i, oi, k, ok);
          if (m < 0 || !usable(static_cast<NodeIndex>(m)))
            throw SingularityError("mixed-derivative stencil out of bounds at node " +
                                   std::to_string(node));
          dd += ci * ck * row(m);
        }
      for (int a = 0; a < N; ++a) {
        j.hessian[static_cast<std::size_t>(a)](i, k) = dd[a];
        j.hessian[static_cast<std::size_t>(a)](k, i) = dd[a];
      }
    }
  return j;
}

void check_point(const VectorXd& x, int n) {
  if (x.size() != n) throw InputError("evaluation point has the wrong dimension");
}

}  // namespace

std::vector<std::pair<int, double>> first_derivative_stencil(
    const DomainBox& box, NodeIndex node, int axis, const std::function<bool(NodeIndex)>& usable) {
  const double h = box.spacing(axis);
  auto ok = [&](int k) {
    const long nb = box.neighbour(node, axis, k);
    return nb >= 0 && usable(static_cast<NodeIndex>(nb));
  };
  if (ok(-1) && ok(1)) return {{-1, -0.5 / h}, {1, 0.5 / h}};
  if (ok(1) && ok(2)) return {{0, -1.5 / h}, {1, 2.0 / h}, {2, -0.5 / h}};
  if (ok(-1) && ok(-2)) return {{0, 1.5 / h}, {-1, -2.0 / h}, {-2, 0.5 / h}};
  throw SingularityError("first-derivative stencil out of bounds at node " + std::to_string(node));
}

MapField MapField::closed_form(std::vector<expr::Ast> components) {
  if (components.empty()) throw InputError("a map needs at least one component");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::ClosedForm;
  impl->n = components.front().dims().n;
  impl->N = static_cast<int>(components.size());
  for (auto& c : components) {
    if (c.dims().n != impl->n) throw InputError("map components disagree on n");
    if (c.uses(expr::VarKind::U) || c.uses(expr::VarKind::Eta) || c.uses(expr::VarKind::P))
      throw InputError("map components may only use x variables");
    c = expr::Ast(c.root_ptr(), expr::Dims{impl->n, impl->N});
  }
  impl->components = std::move(components);
  return MapField(std::move(impl));
}

MapField MapField::parse(const std::vector<std::string>& components, int n, int N) {
  if (static_cast<int>(components.size()) != N)
    throw InputError("expected " + std::to_string(N) + " map components, got " +
                     std::to_string(components.size()));
  std::vector<expr::Ast> asts;
  for (const auto& src : components)
    asts.push_back(expr::parse(src, expr::Dims{n, N}, expr::Scope::spatial()));
  return closed_form(std::move(asts));
}

MapField MapField::grid(DomainBox box, MatrixXd samples) {
  if (static_cast<std::size_t>(samples.rows()) != box.node_count())
    throw InputError("grid samples: expected " + std::to_string(box.node_count()) + " rows");
  if (samples.cols() < 1) throw InputError("grid samples need at least one component");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Grid;
  impl->n = box.dim();
  impl->N = static_cast<int>(samples.cols());
  impl->box = std::move(box);
  impl->samples = std::move(samples);
  return MapField(std::move(impl));
}

MapField MapField::function(int n, int N, JetFunction fn, std::string description) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Function;
  impl->n = n;
  impl->N = N;
  impl->fn = std::move(fn);
  impl->description = std::move(description);
  return MapField(std::move(impl));
}

MapField MapField::zero(int n, int N) {
  std::vector<expr::Ast> comps(static_cast<std::size_t>(N), expr::Ast::constant(0.0, expr::Dims{n, N}));
  return closed_form(std::move(comps));
}

MapField MapField::combine(const MapField& a, double ta, const MapField& b, double tb) {
  if (a.n() != b.n() || a.N() != b.N()) throw InputError("cannot combine maps of different shapes");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Combination;
  impl->n = a.n();
  impl->N = a.N();
  impl->terms = {{ta, a}, {tb, b}};
  return MapField(std::move(impl));
}

int MapField::n() const { return impl_->n; }
int MapField::N() const { return impl_->N; }
MapField::Kind MapField::kind() const { return impl_->kind; }

bool MapField::evaluable_anywhere() const {
  switch (impl_->kind) {
    case Kind::Grid:
      return false;
    case Kind::Combination:
      for (const auto& [t, m] : impl_->terms)
        if (!m.evaluable_anywhere()) return false;
      return true;
    default:
      return true;
  }
}

const DomainBox* MapField::grid_box() const {
  if (impl_->kind == Kind::Grid) return &impl_->box;
  if (impl_->kind == Kind::Combination)
    for (const auto& [t, m] : impl_->terms)
      if (const auto* b = m.grid_box()) return b;
  return nullptr;
}

const MatrixXd* MapField::samples() const {
  return impl_->kind == Kind::Grid ? &impl_->samples : nullptr;
}

const std::vector<expr::Ast>* MapField::components() const {
  return impl_->kind == Kind::ClosedForm ? &impl_->components : nullptr;
}

std::string MapField::describe() const {
  switch (impl_->kind) {
    case Kind::ClosedForm: {
      std::string s = "[";
      for (std::size_t a = 0; a < impl_->components.size(); ++a) {
        if (a) s += ", ";
        s += expr::print(impl_->components[a]);
      }
      return s + "]";
    }
    case Kind::Grid:
      return "grid";
    case Kind::Function:
      return impl_->description;
    case Kind::Combination: {
      std::ostringstream os;
      os << impl_->terms[0].first << "*" << impl_->terms[0].second.describe() << " + "
         << impl_->terms[1].first << "*" << impl_->terms[1].second.describe();
      return os.str();
    }
  }
  return {};
}

Jet2 MapField::jet(const VectorXd& x) const {
  const Impl& m = *impl_;
  check_point(x, m.n);
  switch (m.kind) {
    case Kind::ClosedForm: {
      const expr::VariableLayout layout(expr::Dims{m.n, m.N});
      std::vector<double> slots(static_cast<std::size_t>(layout.size()), 0.0);
      std::vector<int> seeds(static_cast<std::size_t>(m.n));
      for (int i = 0; i < m.n; ++i) {
        slots[static_cast<std::size_t>(i)] = x[i];
        seeds[static_cast<std::size_t>(i)] = i;
      }
      Jet2 j = Jet2::zero(m.n, m.N, x);
      for (int a = 0; a < m.N; ++a) {
        const Dual2 d = expr::eval_jet2(m.components[static_cast<std::size_t>(a)], slots, seeds);
        j.value[a] = d.value;
        j.gradient.row(a) = d.grad.transpose();
        j.hessian[static_cast<std::size_t>(a)] = d.hess;
      }
      return j;
    }
    case Kind::Grid: {
      const long node = m.box.find_node(x);
      if (node < 0) throw InputError("grid maps evaluate only at grid nodes");
      return grid_jet(m.box, m.samples, static_cast<NodeIndex>(node));
    }
    case Kind::Function: {
      Jet2 j = m.fn(x);
      if (j.N() != m.N || j.n() != m.n) throw InputError("map function returned a jet of the wrong shape");
      return j;
    }
    case Kind::Combination: {
      Jet2 j = Jet2::zero(m.n, m.N, x);
      for (const auto& [t, f] : m.terms) j.axpy(t, f.jet(x));
      return j;
    }
  }
  throw InputError("unknown map kind");
}

Jet2 MapField::jet_at_node(const DomainBox& box, NodeIndex node) const {
  const Impl& m = *impl_;
  switch (m.kind) {
    case Kind::Grid: {
      if (box == m.box) return grid_jet(m.box, m.samples, node);
      const long own = m.box.find_node(box.coordinates(node));
      if (own < 0) throw InputError("evaluation node is not a node of the map's grid");
      return grid_jet(m.box, m.samples, static_cast<NodeIndex>(own));
    }
    case Kind::Combination: {
      Jet2 j = Jet2::zero(m.n, m.N, box.coordinates(node));
      for (const auto& [t, f] : m.terms) j.axpy(t, f.jet_at_node(box, node));
      return j;
    }
    default:
      return jet(box.coordinates(node));
  }
}

VectorXd MapField::value(const VectorXd& x) const {
  const Impl& m = *impl_;
  check_point(x, m.n);
  switch (m.kind) {
    case Kind::ClosedForm: {
      const expr::VariableLayout layout(expr::Dims{m.n, m.N});
      std::vector<double> slots(static_cast<std::size_t>(layout.size()), 0.0);
      for (int i = 0; i < m.n; ++i) slots[static_cast<std::size_t>(i)] = x[i];
      VectorXd v(m.N);
      for (int a = 0; a < m.N; ++a) v[a] = expr::evaluate(m.components[static_cast<std::size_t>(a)], slots);
      return v;
    }
    case Kind::Grid: {
      const long node = m.box.find_node(x);
      if (node < 0) throw InputError("grid maps evaluate only at grid nodes");
      return m.samples.row(node).transpose();
    }
    case Kind::Function:
      return m.fn(x).value;
    case Kind::Combination: {
      VectorXd v = VectorXd::Zero(m.N);
      for (const auto& [t, f] : m.terms) v += t * f.value(x);
      return v;
    }
  }
  throw InputError("unknown map kind");
}

Jet2 map_jet(const MapField& u, const VectorXd& x) { return u.jet(x); }

Jet2 map_jet(const MapField& u, const DomainBox& box, NodeIndex node) {
  return u.jet_at_node(box, node);
}

MapField sample_on_grid(const MapField& u, const DomainBox& box) {
  if (box.dim() != u.n()) throw InputError("grid dimension differs from the map's");
  MatrixXd samples(static_cast<Eigen::Index>(box.node_count()), u.N());
  for (NodeIndex node = 0; node < box.node_count(); ++node) {
    const auto r = static_cast<Eigen::Index>(node);
    try {
      const VectorXd v = u.value(box.coordinates(node));
      samples.row(r) = v.transpose();
    } catch (const SingularityError&) {
      samples.row(r).setConstant(std::nan(""));
    } catch (const DomainError&) {
      samples.row(r).setConstant(std::nan(""));
    }
  }
  return MapField::grid(box, std::move(samples));
}

Subdomain prescan_singular(const Subdomain& omega, const MapField& u, const Hamiltonian& H) {
  std::vector<NodeIndex> bad;
  const DomainBox& box = omega.parent();
  for (NodeIndex node : omega.closure()) {
    try {
      const Jet2 j = u.jet_at_node(box, node);
      bool finite = j.value.allFinite() && j.gradient.allFinite();
      for (const auto& h : j.hessian) finite = finite && h.allFinite();
      if (finite) {
        const HamiltonianJet hj = H.jet(j.x, j.value, j.gradient);
        finite = std::isfinite(hj.value) && hj.H_x.allFinite() && hj.H_eta.allFinite() &&
                 hj.H_P.allFinite();
      }
      if (!finite) bad.push_back(node);
    } catch (const SingularityError&) {
      bad.push_back(node);
    } catch (const DomainError&) {
      bad.push_back(node);
    }
  }
  return bad.empty() ? omega : omega.with_singular(bad);
}

}  // namespace linfvar
