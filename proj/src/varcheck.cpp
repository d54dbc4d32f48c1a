#include "linfvar/varcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "linfvar/errors.hpp"

namespace linfvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using expr::Ast;

const char* variation_kind_name(VariationKind k) {
  switch (k) {
    case VariationKind::Free: return "free";
    case VariationKind::RankOne: return "rank_one";
    case VariationKind::Normal: return "normal";
    case VariationKind::Sphere: return "sphere";
  }
  return "unknown";
}

namespace {

constexpr double kScales[] = {1.0, 0.25, 0.0625};

Ast x_var(int i, expr::Dims dims) { return Ast::variable({expr::VarKind::X, 0, i}, dims); }
Ast num(double v, expr::Dims dims) { return Ast::constant(v, dims); }

void require_box(const Subdomain& omega) {
  if (!omega.is_box()) throw InputError("random boundary-vanishing variations need a box subdomain");
}

double default_tol(const VariationOptions& opts, double energy) {
  return opts.tol >= 0.0 ? opts.tol : 1e-9 * (1.0 + std::abs(energy));
}

double default_amplitude(const VariationOptions& opts, const MapField& u, const Subdomain& omega) {
  if (opts.amplitude >= 0.0) return opts.amplitude;
  double sup = 0.0;
  for (NodeIndex node : omega.closure()) sup = std::max(sup, map_jet(u, omega.parent(), node).gradient.norm());
  return sup > 0.0 ? 0.5 * sup : 1.0;
}

std::vector<std::string> print_all(const std::vector<Ast>& comps) {
  std::vector<std::string> out;
  for (const auto& c : comps) out.push_back(expr::print(c));
  return out;
}

/// Tries u ± s φ for the standard scales and folds the result into the verdict.
void try_competitor(Verdict& v, const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                    double base, const MapField& phi, const VariationWitness& tmpl) {
  for (double s : kScales)
    for (double sign : {1.0, -1.0}) {
      const double scale = sign * s;
      const double e = sup_energy(MapField::combine(u, 1.0, phi, scale), H, omega);
      ++v.competitors;
      const double violation = base - e;
      if (violation > v.worst_violation) {
        v.worst_violation = violation;
        VariationWitness w = tmpl;
        w.scale = scale;
        w.base_energy = base;
        w.competitor_energy = e;
        v.witness = std::move(w);
      }
    }
}

void finish(Verdict& v) {
  if (v.competitors == 0) v.worst_violation = 0.0;
  v.pass = v.worst_violation <= v.tolerance;
  if (v.pass && v.worst_violation <= 0.0) v.witness.reset();
}

Subdomain ball_in(const Subdomain& omega, const VectorXd& center, double radius) {
  const DomainBox& box = omega.parent();
  std::vector<char> mask(box.node_count(), 0), singular(box.node_count(), 0);
  const double slack = 1e-9 * box.max_spacing();
  for (NodeIndex node = 0; node < box.node_count(); ++node) {
    mask[node] = omega.masked(node) && (box.coordinates(node) - center).norm() <= radius + slack;
    singular[node] = omega.singular(node);
  }
  return Subdomain(box, std::move(mask), std::move(singular));
}

}  // namespace

Ast random_box_mode_sum(const Subdomain& omega, expr::Dims dims, double amplitude, std::uint64_t seed,
                        int max_modes, int max_frequency) {
  if (max_modes < 1 || max_frequency < 1) throw InputError("mode counts must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> modes(1, max_modes), freq(1, max_frequency);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const int n = dims.n;
  const VectorXd lo = omega.lower(), L = omega.upper() - omega.lower();
  const int m = modes(rng);
  std::vector<std::pair<double, Ast>> terms;
  double bound = 0.0;
  for (int t = 0; t < m; ++t) {
    double c = coef(rng);
    if (c == 0.0) c = 1.0;
    Ast prod;
    double g2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const int k = freq(rng);
      const double w = k * std::numbers::pi / L[i];
      g2 += w * w;
      const Ast arg = num(w, dims) * (x_var(i + 1, dims) - num(lo[i], dims));
      const Ast f = expr::apply(expr::UnaryOp::Sin, arg);
      prod = prod.empty() ? f : prod * f;
    }
    bound += std::abs(c) * std::sqrt(g2);
    terms.emplace_back(c, prod);
  }
  const double scale = amplitude / bound;
  Ast sum;
  for (const auto& [c, mode] : terms) {
    const Ast term = num(c * scale, dims) * mode;
    sum = sum.empty() ? term : sum + term;
  }
  return sum;
}

Verdict absolute_minimiser_test(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                                const VariationOptions& opts) {
  require_box(omega);
  const expr::Dims dims{u.n(), u.N()};
  const double base = sup_energy(u, H, omega);
  const double amplitude = default_amplitude(opts, u, omega);
  Verdict v;
  v.tolerance = default_tol(opts, base);
  v.trials = opts.trials;
  std::mt19937_64 master(opts.seed);
  for (int trial = 0; trial < opts.trials; ++trial) {
    std::vector<Ast> comps;
    for (int a = 0; a < u.N(); ++a)
      comps.push_back(random_box_mode_sum(omega, dims, amplitude, master(), opts.max_modes, opts.max_frequency));
    VariationWitness w;
    w.kind = VariationKind::Free;
    w.trial = trial;
    w.phi = print_all(comps);
    try_competitor(v, u, H, omega, base, MapField::closed_form(comps), w);
  }
  finish(v);
  return v;
}

MapField sphere_variation(const VectorXd& center, const VectorXd& xi, double radius) {
  const expr::Dims dims{static_cast<int>(center.size()), static_cast<int>(xi.size())};
  Ast r2;
  for (int i = 0; i < dims.n; ++i) {
    const Ast d = x_var(i + 1, dims) - num(center[i], dims);
    const Ast sq = d * d;
    r2 = r2.empty() ? sq : r2 + sq;
  }
  const Ast g = r2 - num(radius * radius, dims);
  std::vector<Ast> comps;
  for (int a = 0; a < dims.N; ++a) comps.push_back(num(xi[a], dims) * g);
  return MapField::closed_form(std::move(comps));
}

DanskinResult sphere_danskin(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                             const VectorXd& center, const VectorXd& xi, double radius) {
  const Subdomain ball = ball_in(omega, center, radius);
  return danskin_both(u, H, sphere_variation(center, xi, radius), ball);
}

Verdict rank_one_test(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                      const std::vector<VectorXd>& directions, const VariationOptions& opts) {
  require_box(omega);
  if (directions.empty()) throw InputError("rank-one test needs at least one direction");
  std::vector<VectorXd> dirs;
  for (const auto& d : directions) {
    if (d.size() != u.N()) throw InputError("direction must have N components");
    const double nrm = d.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw InputError("direction xi must be nonzero");
    dirs.push_back(d / nrm);
  }
  const expr::Dims dims{u.n(), u.N()};
  const double base = sup_energy(u, H, omega);
  const double amplitude = default_amplitude(opts, u, omega);
  Verdict v;
  v.tolerance = default_tol(opts, base);
  v.trials = opts.trials * static_cast<int>(dirs.size());
  std::mt19937_64 master(opts.seed);
  for (const VectorXd& xi : dirs)
    for (int trial = 0; trial < opts.trials; ++trial) {
      const Ast g = random_box_mode_sum(omega, dims, amplitude, master(), opts.max_modes, opts.max_frequency);
      std::vector<Ast> comps;
      for (int a = 0; a < u.N(); ++a) comps.push_back(num(xi[a], dims) * g);
      VariationWitness w;
      w.kind = VariationKind::RankOne;
      w.trial = trial;
      w.direction = xi;
      w.phi = print_all(comps);
      try_competitor(v, u, H, omega, base, MapField::closed_form(comps), w);
    }

  // Sphere family centred at the interior node closest to the middle of Ō.
  const DomainBox& box = omega.parent();
  const VectorXd mid = 0.5 * (omega.lower() + omega.upper());
  NodeIndex center_node = omega.interior().front();
  for (NodeIndex node : omega.interior())
    if ((box.coordinates(node) - mid).norm() < (box.coordinates(center_node) - mid).norm()) center_node = node;
  const VectorXd center = box.coordinates(center_node);
  const double reach = std::min((center - omega.lower()).minCoeff(), (omega.upper() - center).minCoeff());
  for (const VectorXd& xi : dirs)
    for (double rho : {reach, 0.5 * reach}) {
      if (rho < 2.0 * box.max_spacing()) continue;
      Subdomain ball;
      try {
        ball = ball_in(omega, center, rho);
      } catch (const InputError&) {
        continue;
      }
      const double ball_base = sup_energy(u, H, ball);
      VariationWitness w;
      w.kind = VariationKind::Sphere;
      w.direction = xi;
      w.center = center;
      w.radius = rho;
      const MapField phi = sphere_variation(center, xi, rho);
      // ‖Dφ‖∞ = 2ρ on the ball.
      const MapField scaled = MapField::combine(phi, amplitude / (2.0 * rho), MapField::zero(u.n(), u.N()), 0.0);
      w.phi = print_all(*phi.components());
      Verdict local;
      try_competitor(local, u, H, ball, ball_base, scaled, w);
      v.competitors += local.competitors;
      if (local.worst_violation > v.worst_violation) {
        v.worst_violation = local.worst_violation;
        v.witness = local.witness;
        v.witness->scale *= amplitude / (2.0 * rho);
      }
    }
  finish(v);
  return v;
}

Verdict normal_variation_test(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                              const VariationOptions& opts, const OperatorOptions& projection) {
  const DomainBox& box = omega.parent();
  const int n = u.n(), N = u.N();
  const std::size_t count = box.node_count();

  // [[H_P]]⊥ at every node of the parent grid where it can be evaluated.
  std::vector<std::optional<MatrixXd>> proj(count);
  std::vector<MatrixXd> hp(count);
  std::function<MatrixXd(const VectorXd&)> at_point;
  if (u.evaluable_anywhere()) at_point = [&](const VectorXd& y) { return hp_field(u, H, y); };
  auto at_node = [&](NodeIndex k) {
    const Jet2 j = u.jet_at_node(box, k);
    return H.jet(j.x, j.value, j.gradient).H_P;
  };
  bool any_normal = false;
  double hp_sup = 0.0;
  for (NodeIndex node = 0; node < count; ++node) {
    if (omega.singular(node)) continue;
    try {
      hp[node] = at_node(node);
      proj[node] = normal_projection(at_point, at_node, EvalSite::at_node(box, node), projection).projection;
    } catch (const SingularityError&) {
      continue;
    } catch (const DomainError&) {
      continue;
    }
    if (omega.masked(node)) {
      hp_sup = std::max(hp_sup, hp[node].cwiseAbs().maxCoeff());
      if (proj[node]->norm() > 0.0) any_normal = true;
    }
  }

  const double base = sup_energy(u, H, omega);
  Verdict v;
  v.tolerance = default_tol(opts, base);
  v.trials = opts.trials;
  if (!any_normal) {
    v.vacuous = true;
    finish(v);
    return v;
  }
  const double amplitude = default_amplitude(opts, u, omega);
  const VectorXd lo = omega.lower(), L = omega.upper() - omega.lower();
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<int> modes(1, opts.max_modes), freq(0, opts.max_frequency);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), phase(0.0, 2.0 * std::numbers::pi);
  int accepted = 0;
  for (int trial = 0; trial < opts.trials; ++trial) {
    struct Mode {
      std::vector<int> k;
      double phase;
      VectorXd c;
    };
    std::vector<Mode> ms(static_cast<std::size_t>(modes(rng)));
    for (auto& m : ms) {
      for (int i = 0; i < n; ++i) m.k.push_back(freq(rng));
      m.phase = phase(rng);
      m.c = VectorXd(N);
      for (int a = 0; a < N; ++a) m.c[a] = coef(rng);
    }
    MatrixXd samples = MatrixXd::Constant(static_cast<Eigen::Index>(count), N, std::nan(""));
    for (NodeIndex node = 0; node < count; ++node) {
      if (!proj[node]) continue;
      const VectorXd x = box.coordinates(node);
      VectorXd psi = VectorXd::Zero(N);
      for (const auto& m : ms) {
        double arg = m.phase;
        for (int i = 0; i < n; ++i) arg += m.k[static_cast<std::size_t>(i)] * std::numbers::pi * (x[i] - lo[i]) / L[i];
        psi += std::cos(arg) * m.c;
      }
      samples.row(static_cast<Eigen::Index>(node)) = (*proj[node] * psi).transpose();
    }
    MapField phi = MapField::grid(box, samples);
    double dphi_sup = 0.0, phi_sup = 0.0, defect = 0.0;
    for (NodeIndex node : omega.closure()) {
      const Jet2 j = phi.jet_at_node(box, node);
      dphi_sup = std::max(dphi_sup, j.gradient.norm());
      phi_sup = std::max(phi_sup, j.value.cwiseAbs().maxCoeff());
      defect = std::max(defect, (hp[node].transpose() * j.value).norm());
    }
    if (!(phi_sup > 1e-14) || !(dphi_sup > 0.0)) continue;
    const double tol_normal = 1e-6 * hp_sup * phi_sup;
    if (defect > tol_normal) continue;
    ++accepted;
    v.admissibility_defect = std::max(v.admissibility_defect, defect * amplitude / dphi_sup);
    samples *= amplitude / dphi_sup;
    phi = MapField::grid(box, samples);
    VariationWitness w;
    w.kind = VariationKind::Normal;
    w.trial = trial;
    try_competitor(v, u, H, omega, base, phi, w);
  }
  if (accepted == 0) v.vacuous = true;
  finish(v);
  return v;
}

StationarityReport stationarity_scan(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                                     const MapField& psi, double delta, double tol_K) {
  require_vanishing_on_boundary(psi, omega);
  const DanskinResult d = danskin_both(u, H, psi, omega, delta);
  const DomainBox& box = omega.parent();
  StationarityReport r;
  r.max_val = d.plus;
  r.min_val = d.minus;
  r.argmax_size = d.argmax.nodes.size();
  std::map<NodeIndex, double> g;
  double gmax = 0.0;
  for (NodeIndex node : d.argmax.nodes) {
    const double v = linearized_density(evaluate_node(u, H, box, node), map_jet(psi, box, node));
    g[node] = v;
    gmax = std::max(gmax, std::abs(v));
  }
  r.tol_K = tol_K >= 0.0 ? tol_K : 1e-6 * (1.0 + gmax);
  std::set<NodeIndex> K;
  for (const auto& [node, v] : g)
    if (std::abs(v) <= r.tol_K) K.insert(node);
  for (const auto& [node, v] : g)
    for (int i = 0; i < box.dim(); ++i) {
      const long nb = box.neighbour(node, i, 1);
      if (nb < 0) continue;
      const auto it = g.find(static_cast<NodeIndex>(nb));
      if (it == g.end()) continue;
      if ((v < 0.0 && it->second > 0.0) || (v > 0.0 && it->second < 0.0))
        K.insert(std::abs(v) <= std::abs(it->second) ? node : it->first);
    }
  r.K.assign(K.begin(), K.end());
  r.statement_II = r.max_val >= -1e-12 * (1.0 + gmax);
  r.statement_III = !r.K.empty();
  r.k_fraction = r.argmax_size ? static_cast<double>(r.K.size()) / static_cast<double>(r.argmax_size) : 0.0;
  return r;
}

DiscreteMeasure DiscreteMeasure::normalized(std::vector<std::pair<NodeIndex, double>> atoms) {
  if (atoms.empty()) throw InputError("a measure needs at least one atom");
  double total = 0.0;
  for (const auto& [node, w] : atoms) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InputError("measure weights must be positive");
    total += w;
  }
  for (auto& a : atoms) a.second /= total;
  return DiscreteMeasure{std::move(atoms)};
}

DiscreteMeasure DiscreteMeasure::uniform(const Subdomain& omega) {
  const DomainBox& box = omega.parent();
  std::vector<std::pair<NodeIndex, double>> atoms;
  for (NodeIndex node : omega.closure()) {
    double w = 1.0;
    for (int i = 0; i < box.dim(); ++i) {
      const long a = box.neighbour(node, i, -1), b = box.neighbour(node, i, 1);
      const bool full = a >= 0 && b >= 0 && omega.masked(static_cast<NodeIndex>(a)) &&
                        omega.masked(static_cast<NodeIndex>(b));
      if (!full) w *= 0.5;
    }
    atoms.emplace_back(node, w);
  }
  return normalized(std::move(atoms));
}

DiscreteMeasure DiscreteMeasure::dirac(NodeIndex node) { return DiscreteMeasure{{{node, 1.0}}}; }

double DiscreteMeasure::total() const {
  double t = 0.0;
  for (const auto& a : atoms) t += a.second;
  return t;
}

MeasureResidual measure_divergence_residual(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                                            const DiscreteMeasure& sigma, const std::vector<MapField>& basis,
                                            double delta, double tol) {
  if (basis.empty()) throw InputError("measure residual needs a nonempty test basis");
  if (sigma.atoms.empty()) throw InputError("measure has no atoms");
  const ArgmaxSet am = argmax_set(u, H, omega, delta);
  const std::set<NodeIndex> support(am.nodes.begin(), am.nodes.end());
  const DomainBox& box = omega.parent();
  std::vector<NodeEvaluation> at;
  for (const auto& [node, w] : sigma.atoms) {
    if (!support.count(node))
      throw InputError("measure atom at node " + std::to_string(node) + " lies outside the argmax set");
    at.push_back(evaluate_node(u, H, box, node));
  }
  MeasureResidual r;
  for (const MapField& psi : basis) {
    require_vanishing_on_boundary(psi, omega);
    double sum = 0.0, mag = 0.0;
    for (std::size_t k = 0; k < at.size(); ++k) {
      const double g = linearized_density(at[k], map_jet(psi, box, at[k].node));
      sum += sigma.atoms[k].second * g;
      mag += sigma.atoms[k].second * std::abs(g);
    }
    r.per_psi.push_back(sum);
    r.worst = std::max(r.worst, std::abs(sum));
    r.scale = std::max(r.scale, mag);
  }
  r.pass = r.worst <= tol * std::max(r.scale, 1.0);
  return r;
}

std::vector<MapField> sine_test_basis(const Subdomain& omega, int N, int count) {
  if (count < 1 || N < 1) throw InputError("basis size must be positive");
  const int n = omega.parent().dim();
  const expr::Dims dims{n, N};
  const VectorXd lo = omega.lower(), L = omega.upper() - omega.lower();
  std::vector<MapField> out;
  // Multi-indices k >= 1 ordered by total degree, then lexicographically.
  for (int total = n; static_cast<int>(out.size()) < count; ++total) {
    std::vector<int> k(static_cast<std::size_t>(n), 1);
    std::vector<std::vector<int>> level;
    std::function<void(int, int)> rec = [&](int axis, int left) {
      if (axis == n - 1) {
        k[static_cast<std::size_t>(axis)] = left;
        if (left >= 1) level.push_back(k);
        return;
      }
      for (int v = 1; v <= left - (n - 1 - axis); ++v) {
        k[static_cast<std::size_t>(axis)] = v;
        rec(axis + 1, left - v);
      }
    };
    rec(0, total);
    for (const auto& ks : level) {
      Ast mode;
      for (int i = 0; i < n; ++i) {
        const double w = ks[static_cast<std::size_t>(i)] * std::numbers::pi / L[i];
        const Ast f = expr::apply(expr::UnaryOp::Sin, num(w, dims) * (x_var(i + 1, dims) - num(lo[i], dims)));
        mode = mode.empty() ? f : mode * f;
      }
      for (int a = 0; a < N && static_cast<int>(out.size()) < count; ++a) {
        std::vector<Ast> comps(static_cast<std::size_t>(N), num(0.0, dims));
        comps[static_cast<std::size_t>(a)] = mode;
        out.push_back(MapField::closed_form(std::move(comps)));
      }
      if (static_cast<int>(out.size()) >= count) break;
    }
  }
  return out;
}

void require_vanishing_on_boundary(const MapField& psi, const Subdomain& omega, double tol) {
  const DomainBox& box = omega.parent();
  double sup = 0.0, bnd = 0.0;
  for (NodeIndex node : omega.closure()) {
    const double v = map_jet(psi, box, node).value.cwiseAbs().maxCoeff();
    sup = std::max(sup, v);
    if (omega.is_boundary(node)) bnd = std::max(bnd, v);
  }
  if (bnd > tol * (1.0 + sup))
    throw InputError("test field must vanish on the boundary (max |psi| there is " + std::to_string(bnd) + ")");
}

}  // namespace linfvar
