#pragma once

// Log-space helpers for quantities whose linear representation under- or
// overflows double precision (certified constants routinely sit near
// exp(-9000)).

#include <cmath>
#include <limits>

namespace kvlab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// ln(1 - e^x) for x <= 0, stable near both ends.
inline double log1mexp(double x) {
    if (x == kNegInf) return 0.0;
    if (x >= 0.0) return x == 0.0 ? kNegInf : std::numeric_limits<double>::quiet_NaN();
    static const double ln2 = std::log(2.0);
    if (x < -ln2) return std::log1p(-std::exp(x));
    return std::log(-std::expm1(x));
}

/// ln(e^a + e^b); tolerates -inf arguments.
inline double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = a > b ? a : b;
    const double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

/// ln(2 - e^z), defined for z < ln 2.
inline double log_two_minus_exp(double z) {
    static const double ln2 = std::log(2.0);
    return ln2 + log1mexp(z - ln2);
}

/// e^x with silent flush-to-zero for deeply negative x.
inline double exp_or_zero(double x) {
    if (x < -745.0) return 0.0;
    return std::exp(x);
}

} // namespace kvlab
