#pragma once

#include <cmath>
#include <numbers>

#include "udwrm/error.hpp"

namespace udwrm {

/// Scaled complementary error function exp(x^2) erfc(x).
inline double erfcx(double x) {
    if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
    if (x < 26.0) return std::exp(x * x) * std::erfc(x);
    // asymptotic series; the first omitted term is below 1e-13 relative here
    const double inv = 1.0 / (2.0 * x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int m = 1; m <= 5; ++m) {
        term *= -(2.0 * m - 1.0) * inv;
        sum += term;
    }
    return sum / (x * std::sqrt(std::numbers::pi));
}

/// Upper incomplete gamma function at a = 1/2: sqrt(pi) erfc(sqrt(x)).
inline double upper_gamma_half(double x) {
    if (x < 0.0) throw Error(ErrorKind::domain, "upper_gamma_half needs x >= 0");
    return std::sqrt(std::numbers::pi) * std::erfc(std::sqrt(x));
}

/// exp(L^2) * integral_L^inf exp(-p^2) (p - L) dp = 1/2 - sqrt(pi)/2 L erfcx(L).
inline double gaussian_ramp_moment(double lower) {
    if (lower > 26.0) {
        // 1/(4L^2) - 3/(8L^4) + 15/(16L^6) - ...
        const double inv = 1.0 / (2.0 * lower * lower);
        double term = 0.5;
        double sum = 0.0;
        for (int m = 1; m <= 6; ++m) {
            term *= (m == 1 ? 1.0 : -(2.0 * m - 1.0)) * inv;
            sum += term;
        }
        return sum;
    }
    return 0.5 - 0.5 * std::sqrt(std::numbers::pi) * lower * erfcx(lower);
}

}  // namespace udwrm
