#include "linfvar/dual.hpp"

#include <cmath>
#include <string>

#include "linfvar/errors.hpp"

namespace linfvar {

namespace {

// f(a) given f(a), f'(a), f''(a).
Dual1 chain(const Dual1& a, double f, double df) {
  Dual1 r;
  r.value = f;
  r.grad = df * a.grad;
  return r;
}

Dual2 chain(const Dual2& a, double f, double df, double d2f) {
  Dual2 r;
  r.value = f;
  r.grad = df * a.grad;
  r.hess = df * a.hess;
  if (d2f != 0.0) r.hess += d2f * Eigen::MatrixXd(a.grad * a.grad.transpose());
  return r;
}

bool is_integer(double e) { return std::isfinite(e) && e == std::round(e); }

void check_pow_const(double a, double e) {
  if (is_integer(e)) {
    if (e < 0 && a == 0.0) throw DomainError("negative integer power of zero");
    return;
  }
  if (a == 0.0) throw SingularityError("fractional power at zero");
  if (a < 0.0) throw DomainError("fractional power of a negative number");
}

// Derivatives of a^e. For integer exponents the zero coefficients are skipped
// so that 0^(e-1) or 0^(e-2) never produce inf * 0.
void pow_derivatives(double a, double e, double& f, double& df, double& d2f) {
  f = std::pow(a, e);
  df = (e == 0.0) ? 0.0 : e * std::pow(a, e - 1.0);
  d2f = (e == 0.0 || e == 1.0) ? 0.0 : e * (e - 1.0) * std::pow(a, e - 2.0);
}

}  // namespace

Dual1 operator+(const Dual1& a, const Dual1& b) {
  Dual1 r;
  r.value = a.value + b.value;
  r.grad = a.grad + b.grad;
  return r;
}

Dual1 operator-(const Dual1& a, const Dual1& b) {
  Dual1 r;
  r.value = a.value - b.value;
  r.grad = a.grad - b.grad;
  return r;
}

Dual1 operator*(const Dual1& a, const Dual1& b) {
  Dual1 r;
  r.value = a.value * b.value;
  r.grad = a.value * b.grad + b.value * a.grad;
  return r;
}

Dual1 operator/(const Dual1& a, const Dual1& b) { return dual_math::divide(a, b); }

Dual1 operator-(const Dual1& a) {
  Dual1 r;
  r.value = -a.value;
  r.grad = -a.grad;
  return r;
}

Dual2 operator+(const Dual2& a, const Dual2& b) {
  Dual2 r;
  r.value = a.value + b.value;
  r.grad = a.grad + b.grad;
  r.hess = a.hess + b.hess;
  return r;
}

Dual2 operator-(const Dual2& a, const Dual2& b) {
  Dual2 r;
  r.value = a.value - b.value;
  r.grad = a.grad - b.grad;
  r.hess = a.hess - b.hess;
  return r;
}

Dual2 operator*(const Dual2& a, const Dual2& b) {
  Dual2 r;
  r.value = a.value * b.value;
  r.grad = a.value * b.grad + b.value * a.grad;
  r.hess = a.value * b.hess + b.value * a.hess;
  // X + Xᵀ keeps the Hessian bitwise symmetric.
  const Eigen::MatrixXd outer = a.grad * b.grad.transpose();
  r.hess += outer + outer.transpose();
  return r;
}

Dual2 operator/(const Dual2& a, const Dual2& b) { return dual_math::divide(a, b); }

Dual2 operator-(const Dual2& a) {
  Dual2 r;
  r.value = -a.value;
  r.grad = -a.grad;
  r.hess = -a.hess;
  return r;
}

namespace dual_math {

double abs(double a) {
  if (a == 0.0) throw SingularityError("abs evaluated at its kink 0");
  return std::abs(a);
}

double sqrt(double a) {
  if (a < 0.0) throw DomainError("sqrt of a negative number");
  if (a == 0.0) throw SingularityError("sqrt evaluated at its branch point 0");
  return std::sqrt(a);
}

double exp(double a) { return std::exp(a); }

double log(double a) {
  if (a <= 0.0) throw DomainError("log of a nonpositive number");
  return std::log(a);
}

double sin(double a) { return std::sin(a); }
double cos(double a) { return std::cos(a); }

double divide(double a, double b) {
  if (b == 0.0) throw DomainError("division by zero");
  return a / b;
}

double pow_const(double a, double e) {
  check_pow_const(a, e);
  return std::pow(a, e);
}

double pow_general(double a, double b) {
  if (a == 0.0) throw SingularityError("variable power of zero");
  if (a < 0.0) throw DomainError("variable power of a negative number");
  return std::pow(a, b);
}

Dual1 abs(const Dual1& a) {
  const double s = a.value > 0 ? 1.0 : -1.0;
  return chain(a, abs(a.value), s);
}

Dual1 sqrt(const Dual1& a) {
  const double s = sqrt(a.value);
  return chain(a, s, 0.5 / s);
}

Dual1 exp(const Dual1& a) {
  const double e = std::exp(a.value);
  return chain(a, e, e);
}

Dual1 log(const Dual1& a) { return chain(a, log(a.value), 1.0 / a.value); }

Dual1 sin(const Dual1& a) { return chain(a, std::sin(a.value), std::cos(a.value)); }
Dual1 cos(const Dual1& a) { return chain(a, std::cos(a.value), -std::sin(a.value)); }

Dual1 divide(const Dual1& a, const Dual1& b) {
  if (b.value == 0.0) throw DomainError("division by zero");
  const double inv = 1.0 / b.value;
  return a * chain(b, inv, -inv * inv);
}

Dual1 pow_const(const Dual1& a, double e) {
  check_pow_const(a.value, e);
  double f, df, d2f;
  pow_derivatives(a.value, e, f, df, d2f);
  return chain(a, f, df);
}

Dual1 pow_general(const Dual1& a, const Dual1& b) {
  pow_general(a.value, b.value);
  return exp(b * log(a));
}

Dual2 abs(const Dual2& a) {
  const double s = a.value > 0 ? 1.0 : -1.0;
  return chain(a, abs(a.value), s, 0.0);
}

Dual2 sqrt(const Dual2& a) {
  const double s = sqrt(a.value);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.value));
}

Dual2 exp(const Dual2& a) {
  const double e = std::exp(a.value);
  return chain(a, e, e, e);
}

Dual2 log(const Dual2& a) {
  const double l = log(a.value);
  return chain(a, l, 1.0 / a.value, -1.0 / (a.value * a.value));
}

Dual2 sin(const Dual2& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return chain(a, s, c, -s);
}

Dual2 cos(const Dual2& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return chain(a, c, -s, -c);
}

Dual2 divide(const Dual2& a, const Dual2& b) {
  if (b.value == 0.0) throw DomainError("division by zero");
  const double inv = 1.0 / b.value;
  return a * chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

Dual2 pow_const(const Dual2& a, double e) {
  check_pow_const(a.value, e);
  double f, df, d2f;
  pow_derivatives(a.value, e, f, df, d2f);
  return chain(a, f, df, d2f);
}

Dual2 pow_general(const Dual2& a, const Dual2& b) {
  pow_general(a.value, b.value);
  return exp(b * log(a));
}

}  // namespace dual_math

}  // namespace linfvar
