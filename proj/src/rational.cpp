#include "pagar/rational.hpp"

#include <cmath>

#include "pagar/errors.hpp"

namespace pagar {

Rational rationalize(double x) {
  if (!std::isfinite(x)) throw DomainError("cannot rationalize a non-finite value");
  using boost::multiprecision::cpp_int;
  const bool neg = x < 0;
  double y = std::fabs(x);
  const double tol = 1e-15 * std::max(1.0, y);

  // convergents h/k of the continued fraction of y
  cpp_int h_prev = 1, h = static_cast<long long>(std::floor(y));
  cpp_int k_prev = 0, k = 1;
  double frac = y - std::floor(y);
  for (int it = 0; it < 64; ++it) {
    Rational q(h, k);
    if (std::fabs(to_double(q) - y) <= tol || frac < 1e-300) break;
    double inv = 1.0 / frac;
    double a = std::floor(inv);
    frac = inv - a;
    cpp_int ai = static_cast<long long>(a);
    cpp_int h_next = ai * h + h_prev;
    cpp_int k_next = ai * k + k_prev;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
  }
  Rational out(h, k);
  return neg ? Rational(-out) : out;
}

std::string to_string(const Rational& q) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace pagar
