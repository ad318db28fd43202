#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <complex>
#include <numbers>
#include <optional>
#include <variant>

#include "udwrm/error.hpp"
#include "udwrm/schedule.hpp"

namespace udwrm {

struct Inertial {};

struct Accelerated {
    double acceleration = 0.0;  // proper acceleration, inverse proper time
};

using Worldline = std::variant<Inertial, Accelerated>;

inline void validate(const Worldline& worldline) {
    if (const auto* acc = std::get_if<Accelerated>(&worldline); acc && !(acc->acceleration > 0.0))
        throw Error(ErrorKind::domain, "acceleration must be > 0");
}

/// Pull-back of the massless vacuum two-point function onto a stationary
/// worldline, regularised by a small imaginary shift of the time difference.
struct WightmanKernel {
    Worldline worldline;
    double regulator_epsilon = 0.1;
};

namespace detail {

inline constexpr double four_pi_squared = 4.0 * std::numbers::pi * std::numbers::pi;

// Kernel at a complex proper-time difference z (z = s - i eps for the inertial
// line, the accelerated form carries its own shift).
inline std::complex<double> kernel_at(const Worldline& worldline, std::complex<double> z) {
    if (std::holds_alternative<Inertial>(worldline)) return -1.0 / (four_pi_squared * z * z);
    const double alpha = std::get<Accelerated>(worldline).acceleration;
    const std::complex<double> sh = std::sinh(0.5 * alpha * z);
    return -(alpha * alpha) / (4.0 * four_pi_squared) / (sh * sh);
}

}  // namespace detail

/// Regularised kernel W_eps(s) for real proper-time difference s.
inline std::complex<double> eval_kernel(const WightmanKernel& kernel, double s) {
    validate(kernel.worldline);
    if (!(kernel.regulator_epsilon > 0.0)) throw Error(ErrorKind::domain, "regulator epsilon must be > 0");
    const double eps = kernel.regulator_epsilon;
    if (std::holds_alternative<Inertial>(kernel.worldline))
        return detail::kernel_at(kernel.worldline, {s, -eps});
    // sinh^2(alpha s / 2 - i alpha eps): the shift enters as s - 2 i eps
    return detail::kernel_at(kernel.worldline, {s, -2.0 * eps});
}

/// Kernel at imaginary-time-shifted argument s - i tau with tau > 0; used to
/// probe analytic structure such as thermal periodicity.
inline std::complex<double> eval_kernel_shifted(const Worldline& worldline, double s, double tau) {
    validate(worldline);
    return detail::kernel_at(worldline, {s, -tau});
}

/// Regulator-free kernel for s != 0, real because the field commutator
/// vanishes between timelike-separated points.
inline double separated_kernel(const Worldline& worldline, double s) {
    validate(worldline);
    if (s == 0.0) throw Error(ErrorKind::domain, "separated kernel needs s != 0");
    if (std::holds_alternative<Inertial>(worldline)) return -1.0 / (detail::four_pi_squared * s * s);
    const double alpha = std::get<Accelerated>(worldline).acceleration;
    const double sh = std::sinh(0.5 * alpha * s);
    return -(alpha * alpha) / (4.0 * detail::four_pi_squared) / (sh * sh);
}

/// Unruh temperature alpha / 2pi of an accelerated line; none for an inertial one.
inline std::optional<double> unruh_temperature(const Worldline& worldline) {
    validate(worldline);
    if (const auto* acc = std::get_if<Accelerated>(&worldline))
        return acc->acceleration / (2.0 * std::numbers::pi);
    return std::nullopt;
}

/// Boltzmann factor exp(-gap / T) of the line's equilibrium state, 0 when inertial.
inline double detailed_balance_ratio(const Worldline& worldline, double gap) {
    const auto temperature = unruh_temperature(worldline);
    return temperature ? std::exp(-gap / *temperature) : 0.0;
}

/// Regulator-free kernel at the closest approach of two interaction
/// intervals, T |i - j| - T_on.
inline double extreme_point_value(const Worldline& worldline, const RepetitionSchedule& schedule, std::int64_t i,
                                  std::int64_t j) {
    const double separation = schedule.period() * static_cast<double>(std::llabs(i - j)) - schedule.on_time;
    if (i == j || !(separation > 0.0))
        throw Error(ErrorKind::domain, "extreme-point kernel needs two distinct intervals");
    return separated_kernel(worldline, separation);
}

}  // namespace udwrm
