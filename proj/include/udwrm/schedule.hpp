#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <variant>

#include "udwrm/error.hpp"

namespace udwrm {

/// Gaussian cut off at the edges of its interaction interval.
struct TruncatedGaussian {
    double sigma = 1.0;
};

/// Gaussian without truncation; reference for closed-form comparisons.
struct Gaussian {
    double sigma = 1.0;
};

/// Smooth compact bump exp(t^2 / (t^2 - w^2)) for |t| < w.
struct Bump {
    double half_width = 1.0;
};

using SwitchingProfile = std::variant<TruncatedGaussian, Gaussian, Bump>;

/// Numerical support of an untruncated Gaussian, in units of sigma.
inline constexpr double kGaussianCutoffSigmas = 12.0;

/// Regular sequence of interaction intervals I_k = [kT, kT + T_on], k = 0..count-1,
/// separated by measurement windows of length T_off.
struct RepetitionSchedule {
    double on_time = 8.0;
    double off_time = 80.0;
    std::int64_t count = 4;
    SwitchingProfile profile = TruncatedGaussian{1.0};

    double period() const noexcept { return on_time + off_time; }
    double interval_start(std::int64_t k) const noexcept { return static_cast<double>(k) * period(); }
    double interval_centre(std::int64_t k) const noexcept { return interval_start(k) + 0.5 * on_time; }
};

/// Defaults tied to the profile width: T_on = 8 sigma, T_off = 10 T_on.
inline RepetitionSchedule default_schedule(double sigma, std::int64_t count) {
    return {8.0 * sigma, 80.0 * sigma, count, TruncatedGaussian{sigma}};
}

inline void validate(const RepetitionSchedule& schedule) {
    if (!(schedule.on_time > 0.0)) throw Error(ErrorKind::domain, "T_on must be > 0");
    if (!(schedule.off_time > 0.0)) throw Error(ErrorKind::domain, "T_off must be > 0");
    if (schedule.count < 1) throw Error(ErrorKind::domain, "repetition count must be >= 1");
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, Bump>) {
                if (!(p.half_width > 0.0)) throw Error(ErrorKind::domain, "bump half-width must be > 0");
                if (p.half_width > 0.5 * schedule.on_time * (1.0 + 1e-12))
                    throw Error(ErrorKind::domain, "bump support must fit inside the interaction interval");
            } else {
                if (!(p.sigma > 0.0)) throw Error(ErrorKind::domain, "sigma must be > 0");
            }
        },
        schedule.profile);
}

/// Profile value at offset t from the interval centre.
inline double profile_value(const RepetitionSchedule& schedule, double t) {
    return std::visit(
        [&](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, TruncatedGaussian>) {
                if (std::abs(t) > 0.5 * schedule.on_time) return 0.0;
                return std::exp(-t * t / (2.0 * p.sigma * p.sigma));
            } else if constexpr (std::is_same_v<P, Gaussian>) {
                return std::exp(-t * t / (2.0 * p.sigma * p.sigma));
            } else {
                const double w2 = p.half_width * p.half_width;
                if (t * t >= w2) return 0.0;
                return std::exp(t * t / (t * t - w2));
            }
        },
        schedule.profile);
}

/// Half-width of the region around each centre where the profile is integrated.
inline double support_half_width(const RepetitionSchedule& schedule) {
    return std::visit(
        [&](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, TruncatedGaussian>)
                return 0.5 * schedule.on_time;
            else if constexpr (std::is_same_v<P, Gaussian>)
                return kGaussianCutoffSigmas * p.sigma;
            else
                return p.half_width;
        },
        schedule.profile);
}

/// Length scale over which the profile varies; sets quadrature panel widths.
inline double profile_scale(const RepetitionSchedule& schedule) {
    return std::visit(
        [](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, Bump>)
                return 0.25 * p.half_width;
            else
                return p.sigma;
        },
        schedule.profile);
}

inline bool has_compact_support(const RepetitionSchedule& schedule) {
    return !std::holds_alternative<Gaussian>(schedule.profile);
}

/// Gaussian width when the profile is Gaussian in either form.
inline std::optional<double> gaussian_sigma(const RepetitionSchedule& schedule) {
    if (const auto* g = std::get_if<TruncatedGaussian>(&schedule.profile)) return g->sigma;
    if (const auto* g = std::get_if<Gaussian>(&schedule.profile)) return g->sigma;
    return std::nullopt;
}

/// Switching function of the whole repeated-measurement schedule at proper time tau.
inline double chi_rm(const RepetitionSchedule& schedule, double tau) {
    validate(schedule);
    if (has_compact_support(schedule)) {
        const auto k = static_cast<std::int64_t>(std::floor(tau / schedule.period()));
        if (k < 0 || k >= schedule.count) return 0.0;
        const double offset = tau - schedule.interval_centre(k);
        if (std::abs(offset) > 0.5 * schedule.on_time) return 0.0;
        return profile_value(schedule, offset);
    }
    double total = 0.0;
    for (std::int64_t k = 0; k < schedule.count; ++k) total += profile_value(schedule, tau - schedule.interval_centre(k));
    return total;
}

/// Largest repetition count for which the leaked switching outside the
/// interaction intervals stays negligible: floor(tolerance / residual), where
/// the residual is the largest value the summed untruncated profiles take in a
/// measurement window. Compactly supported profiles leak nothing and return
/// no limit.
inline std::optional<std::int64_t> max_repetitions(const RepetitionSchedule& schedule,
                                                   double tolerance = 1e-2) {
    validate(schedule);
    if (has_compact_support(schedule)) return std::nullopt;
    if (!(tolerance > 0.0)) throw Error(ErrorKind::domain, "leak tolerance must be > 0");
    const double sigma = std::get<Gaussian>(schedule.profile).sigma;
    // The window edge next to interval k sees its own tail at T_on/2 plus the
    // tails of interval k+j at jT - T_on/2 and of interval k-j at jT + T_on/2.
    auto tail = [&](double distance) { return std::exp(-distance * distance / (2.0 * sigma * sigma)); };
    const double half_on = 0.5 * schedule.on_time;
    double residual = tail(half_on);
    for (int j = 1; j < 1000; ++j) {
        const double term = tail(j * schedule.period() - half_on) + tail(j * schedule.period() + half_on);
        residual += term;
        if (term < 1e-300) break;
    }
    return static_cast<std::int64_t>(std::floor(tolerance / residual));
}

}  // namespace udwrm
