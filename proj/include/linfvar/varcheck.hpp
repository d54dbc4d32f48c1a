#pragma once

// Numerical minimality verdicts. A failing verdict carries a competitor
// that beats u and certifies non-minimality; a passing verdict is sampling
// evidence only.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "linfvar/energy.hpp"
#include "linfvar/operators.hpp"
#include "linfvar/problem.hpp"

namespace linfvar {

enum class VariationKind { Free, RankOne, Normal, Sphere };
const char* variation_kind_name(VariationKind k);

struct VariationWitness {
  VariationKind kind = VariationKind::Free;
  int trial = -1;
  double scale = 0.0;                  ///< competitor is u + scale * phi
  std::vector<std::string> phi;        ///< component expressions (closed-form families)
  Eigen::VectorXd direction;           ///< rank-one and sphere families
  Eigen::VectorXd center;              ///< sphere family
  double radius = 0.0;                 ///< sphere family
  double base_energy = 0.0;
  double competitor_energy = 0.0;
};

struct Verdict {
  bool pass = true;
  /// max over competitors of E∞(u) - E∞(u + φ); pass iff <= tolerance.
  double worst_violation = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  int trials = 0;
  int competitors = 0;
  std::optional<VariationWitness> witness;
  /// Normal test: no admissible nonzero variation exists.
  bool vacuous = false;
  double admissibility_defect = 0.0;
};

struct VariationOptions {
  int trials = 50;
  double amplitude = -1.0;   ///< < 0: half the sup of |Du| over Ō (1 if zero)
  std::uint64_t seed = 0;
  double tol = -1.0;         ///< < 0: 1e-9 * (1 + E∞(u))
  int max_modes = 5;
  int max_frequency = 5;
};

/// Random sum of at most `max_modes` products of sin(k π (x_i - lo_i) / L_i)
/// over the bounding box of `omega`, scaled so that the sum of mode
/// gradient bounds equals `amplitude`. Vanishes on the faces of the box.
expr::Ast random_box_mode_sum(const Subdomain& omega, expr::Dims dims, double amplitude,
                              std::uint64_t seed, int max_modes = 5, int max_frequency = 5);

Verdict absolute_minimiser_test(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                                const VariationOptions& opts = {});

/// Rank-one variations g ξ for each direction, plus the sphere family
/// ξ (|y - x|² - ρ²) on interior balls.
Verdict rank_one_test(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                      const std::vector<Eigen::VectorXd>& directions, const VariationOptions& opts = {});

/// Variations φ = [[H_P]]⊥ ψ with free smooth ψ; not required to vanish
/// on the boundary.
Verdict normal_variation_test(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                              const VariationOptions& opts = {},
                              const OperatorOptions& projection = {});

/// Danskin derivatives of the sphere variation ξ (|y - x|² - ρ²) on B_ρ(x).
DanskinResult sphere_danskin(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                             const Eigen::VectorXd& center, const Eigen::VectorXd& xi, double radius);

MapField sphere_variation(const Eigen::VectorXd& center, const Eigen::VectorXd& xi, double radius);

struct StationarityReport {
  double max_val = 0.0, min_val = 0.0;
  std::vector<NodeIndex> K;
  std::size_t argmax_size = 0;
  double tol_K = 0.0;
  bool statement_II = false;   ///< max_val >= -tol
  bool statement_III = false;  ///< K nonempty
  double k_fraction = 0.0;     ///< |K| / |Argmax|
};

/// g = H_P : Dψ + H_η · ψ on the argmax set. K collects nodes with
/// |g| <= tol_K, plus, for each pair of grid-adjacent argmax nodes where g
/// changes sign, the one with the smaller |g|.
StationarityReport stationarity_scan(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                                     const MapField& psi, double delta = -1.0, double tol_K = -1.0);

struct DiscreteMeasure {
  std::vector<std::pair<NodeIndex, double>> atoms;

  /// Positive weights rescaled to sum to one.
  static DiscreteMeasure normalized(std::vector<std::pair<NodeIndex, double>> atoms);
  /// Uniform (Lebesgue) measure on Ō realized with tensor trapezoidal weights.
  static DiscreteMeasure uniform(const Subdomain& omega);
  static DiscreteMeasure dirac(NodeIndex node);
  double total() const;
};

struct MeasureResidual {
  double worst = 0.0;
  std::vector<double> per_psi;
  double scale = 0.0;  ///< max over ψ of Σ w |g_ψ|
  bool pass = false;   ///< worst <= tol * max(scale, 1)
};

/// r(ψ) = Σ w (H_P : Dψ + H_η · ψ)(atom). Atoms outside the argmax set are
/// an input error.
MeasureResidual measure_divergence_residual(const MapField& u, const Hamiltonian& H, const Subdomain& omega,
                                            const DiscreteMeasure& sigma, const std::vector<MapField>& basis,
                                            double delta = -1.0, double tol = 1e-10);

/// k-th sine mode basis vanishing on the faces of the bounding box of Ō
/// (tensor products in more than one dimension), N copies per mode.
std::vector<MapField> sine_test_basis(const Subdomain& omega, int N, int count);

/// Throws InputError unless |ψ| <= tol (1 + sup|ψ|) on the boundary nodes.
void require_vanishing_on_boundary(const MapField& psi, const Subdomain& omega, double tol = 1e-9);

}  // namespace linfvar
