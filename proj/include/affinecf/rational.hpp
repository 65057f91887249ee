#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <string>

namespace affinecf {

/// Exact rational in lowest terms (GMP-backed).
using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

inline std::string toString(const Rational& q) {
    const BigInt num = boost::multiprecision::numerator(q);
    const BigInt den = boost::multiprecision::denominator(q);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

inline double toDouble(const Rational& q) { return q.convert_to<double>(); }

inline BigInt factorialBig(int n) {
    BigInt f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace affinecf
