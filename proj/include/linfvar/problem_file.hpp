#pragma once

// JSON problem files and grid CSV files.
//
//   { "n": 2, "N": 1,
//     "domain":    {"lo": [1, 1], "hi": [2, 2], "resolution": [33, 33]},
//     "H":         "dirichlet" | "<expression in x, eta/u, P>",
//     "u":         ["<expression in x>", ...] | {"grid": "<CSV path>"},
//     "subdomain": {"lo": [...], "hi": [...]},            (optional)
//     "singular":  [{"axis": 1, "value": 0.0}, ...] }     (optional)
//
// A singular entry masks every node whose coordinate along `axis` (1-based)
// equals `value`. Grid CSV paths are relative to the problem file. The CSV
// holds one row per node: the 0-based multi-index followed by the N
// components, with an optional header line.

#include <filesystem>
#include <string>
#include <vector>

#include "linfvar/problem.hpp"

namespace linfvar {

struct Problem {
  int n = 1, N = 1;
  DomainBox domain;
  Hamiltonian H = Hamiltonian::dirichlet(1, 1);
  MapField u;
  /// Subdomain with declared and pre-scanned singular nodes masked.
  Subdomain omega;
  std::string H_source;
  std::vector<std::string> u_source;  ///< empty for grid maps
  std::vector<NodeIndex> declared_singular, detected_singular;
  /// Canonical serialization of the problem JSON (sorted keys, no spaces).
  std::string canonical;
};

/// Throws InputError with the offending field path, or ParseError for bad
/// expressions.
Problem load_problem(const std::filesystem::path& path);
Problem parse_problem(const std::string& json_text, const std::filesystem::path& base_dir = ".");

Eigen::MatrixXd read_grid_csv(const std::filesystem::path& path, const DomainBox& box, int N);
void write_grid_csv(const std::filesystem::path& path, const DomainBox& box,
                    const Eigen::MatrixXd& samples);

}  // namespace linfvar
