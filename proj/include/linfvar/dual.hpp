#pragma once

// Forward-mode dual numbers of first and second order.
//
// A Dual2 carries (f, ∇f, ∇²f) with respect to k active seeds; arithmetic
// propagates them through the product/quotient/chain rules. The elementary
// functions raise DomainError / SingularityError exactly where the
// expression language says they must (see expr.hpp).

#include <Eigen/Core>

namespace linfvar {

struct Dual1 {
  double value = 0.0;
  Eigen::VectorXd grad;

  Dual1() = default;
  Dual1(double v, Eigen::Index seeds) : value(v), grad(Eigen::VectorXd::Zero(seeds)) {}
  static Dual1 constant(double v, Eigen::Index seeds) { return Dual1(v, seeds); }
  static Dual1 variable(double v, Eigen::Index seeds, Eigen::Index which) {
    Dual1 d(v, seeds);
    d.grad[which] = 1.0;
    return d;
  }
  Eigen::Index seeds() const { return grad.size(); }
};

struct Dual2 {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;

  Dual2() = default;
  Dual2(double v, Eigen::Index seeds)
      : value(v), grad(Eigen::VectorXd::Zero(seeds)), hess(Eigen::MatrixXd::Zero(seeds, seeds)) {}
  static Dual2 constant(double v, Eigen::Index seeds) { return Dual2(v, seeds); }
  static Dual2 variable(double v, Eigen::Index seeds, Eigen::Index which) {
    Dual2 d(v, seeds);
    d.grad[which] = 1.0;
    return d;
  }
  Eigen::Index seeds() const { return grad.size(); }
};

Dual1 operator+(const Dual1& a, const Dual1& b);
Dual1 operator-(const Dual1& a, const Dual1& b);
Dual1 operator*(const Dual1& a, const Dual1& b);
Dual1 operator/(const Dual1& a, const Dual1& b);
Dual1 operator-(const Dual1& a);

Dual2 operator+(const Dual2& a, const Dual2& b);
Dual2 operator-(const Dual2& a, const Dual2& b);
Dual2 operator*(const Dual2& a, const Dual2& b);
Dual2 operator/(const Dual2& a, const Dual2& b);
Dual2 operator-(const Dual2& a);

// Elementary functions. The double overloads apply the same domain and
// singularity policy as the dual ones, so value-only evaluation rejects the
// same points as differentiated evaluation.
namespace dual_math {

double abs(double a);
double sqrt(double a);
double exp(double a);
double log(double a);
double sin(double a);
double cos(double a);
double divide(double a, double b);
/// a^e where e does not depend on any seed.
double pow_const(double a, double e);
/// a^b with a variable exponent (requires a > 0).
double pow_general(double a, double b);

Dual1 abs(const Dual1& a);
Dual1 sqrt(const Dual1& a);
Dual1 exp(const Dual1& a);
Dual1 log(const Dual1& a);
Dual1 sin(const Dual1& a);
Dual1 cos(const Dual1& a);
Dual1 divide(const Dual1& a, const Dual1& b);
Dual1 pow_const(const Dual1& a, double e);
Dual1 pow_general(const Dual1& a, const Dual1& b);

Dual2 abs(const Dual2& a);
Dual2 sqrt(const Dual2& a);
Dual2 exp(const Dual2& a);
Dual2 log(const Dual2& a);
Dual2 sin(const Dual2& a);
Dual2 cos(const Dual2& a);
Dual2 divide(const Dual2& a, const Dual2& b);
Dual2 pow_const(const Dual2& a, double e);
Dual2 pow_general(const Dual2& a, const Dual2& b);

}  // namespace dual_math

}  // namespace linfvar
