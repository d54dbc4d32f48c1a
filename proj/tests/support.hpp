#pragma once

#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "linfvar/grid.hpp"

namespace testing {

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

inline linfvar::Subdomain box_domain(std::initializer_list<double> lo, std::initializer_list<double> hi,
                                     std::vector<int> res) {
  return linfvar::Subdomain::whole(linfvar::DomainBox(vec(lo), vec(hi), std::move(res)));
}

// Expression text for a double that parses back to the same value.
inline std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << v << ")";
  return os.str();
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing
