#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fglab {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Rational rational_pow(const Rational& base, long long e) {
    if (e == 0) return Rational(1);
    if (base == 0 && e < 0) throw std::domain_error("rational_pow: zero base with negative exponent");
    Rational b = e > 0 ? base : Rational(1) / base;
    unsigned long long k = e > 0 ? (unsigned long long)e : (unsigned long long)(-e);
    Rational acc(1);
    while (k) {
        if (k & 1) acc *= b;
        b *= b;
        k >>= 1;
    }
    return acc;
}

inline std::string rational_str(const Rational& q) { return q.str(); }

inline double rational_to_double(const Rational& q) { return q.convert_to<double>(); }

// exact value of "<int>.<frac>" decimal literals
inline Rational rational_from_decimal(const std::string& intpart, const std::string& fracpart) {
    Integer n(intpart.empty() ? "0" : intpart);
    Integer scale(1);
    for (char c : fracpart) {
        (void)c;
        scale *= 10;
    }
    Integer f(fracpart.empty() ? "0" : fracpart);
    return Rational(n * scale + f, scale);
}

inline std::size_t rational_hash(const Rational& q) {
    // cheap structural hash; collisions only cost a deep compare
    std::size_t h = std::hash<double>{}(rational_to_double(q));
    h ^= std::hash<std::size_t>{}((std::size_t)numerator(q).backend().size() * 1315423911u);
    return h;
}

} // namespace fglab
