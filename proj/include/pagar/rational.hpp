#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace pagar {

using Rational = boost::multiprecision::cpp_rational;

// smallest-denominator rational within 1e-15 (relative) of x, found by
// continued fractions; 0.2 becomes 1/5
Rational rationalize(double x);

std::string to_string(const Rational& q);
double to_double(const Rational& q);

}  // namespace pagar
