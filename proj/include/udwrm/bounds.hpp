#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "udwrm/combinatorics.hpp"
#include "udwrm/error.hpp"
#include "udwrm/kernel.hpp"
#include "udwrm/response.hpp"
#include "udwrm/schedule.hpp"

namespace udwrm {

enum class BoundKind { loose, tight };

/// Bracket on a conditional probability q (1 + c). The relative corrections
/// c are kept alongside so comparisons against tiny corrections stay exact.
struct BoundPair {
    double q = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double rel_lower = 0.0;
    double rel_upper = 0.0;
    BoundKind kind = BoundKind::loose;
    bool fallback = false;  // tight bounds were requested but loose ones returned
    std::string note;

    /// A bound above one carries no information about the probability.
    bool meaningful() const noexcept { return upper <= 1.0 && lower >= 0.0; }
    bool contains(double relative_correction) const noexcept {
        return rel_lower <= relative_correction && relative_correction <= rel_upper;
    }
    bool contains(const BoundPair& inner) const noexcept {
        return rel_lower <= inner.rel_lower && inner.rel_upper <= rel_upper;
    }
};

inline BoundPair make_bounds(double q, double rel_lower, double rel_upper, BoundKind kind) {
    return {q, q * (1.0 + rel_lower), q * (1.0 + rel_upper), rel_lower, rel_upper, kind, false, {}};
}

namespace detail {

inline void check_probability(double q) {
    if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::domain, "q must lie in (0, 1)");
}

inline void check_ratio(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorKind::domain, "gamma must lie in [0, 1)");
}

// log of sum_{k of given parity, 2 <= k <= n} C(n,k) c(k) gamma^k; -inf when empty.
inline double log_loose_sum(int n, bool even, double gamma, std::span<const double> log_crossings) {
    if (gamma == 0.0) return -std::numeric_limits<double>::infinity();
    const double log_gamma = std::log(gamma);
    double peak = -std::numeric_limits<double>::infinity();
    std::vector<double> logs;
    for (int k = even ? 2 : 3; k <= n; k += 2) {
        const double term = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                            log_crossings[k] + k * log_gamma;
        logs.push_back(term);
        peak = std::max(peak, term);
    }
    if (logs.empty()) return -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (double term : logs) sum += std::exp(term - peak);
    return peak + std::log(sum);
}

}  // namespace detail

/// Worst-case sum over subsets of size k <= n of the bound c(k) gamma^k,
/// restricted to even (plus) or odd (minus) k.
inline double loose_sum(int n, bool even, double gamma) {
    if (n < 0) throw Error(ErrorKind::domain, "loose_sum needs n >= 0");
    detail::check_ratio(gamma);
    const auto logs = log_crossing_counts(std::max(n, 2));
    return std::exp(detail::log_loose_sum(n, even, gamma, logs));
}

/// History-independent bracket on the n-th conditional excitation probability.
inline BoundPair loose_bounds(int n, double q, double gamma) {
    if (n < 1) throw Error(ErrorKind::domain, "loose_bounds needs n >= 1");
    detail::check_probability(q);
    detail::check_ratio(gamma);
    const double plus_n = loose_sum(n, true, gamma);
    const double minus_n = loose_sum(n, false, gamma);
    const double plus_prev = loose_sum(n - 1, true, gamma);
    const double minus_prev = loose_sum(n - 1, false, gamma);
    if (!(1.0 - minus_prev > 0.0))
        throw Error(ErrorKind::horizon_exceeded, "n = " + std::to_string(n) + " is beyond the validity horizon");
    return make_bounds(q, -(minus_n + plus_prev) / (1.0 + plus_prev), (plus_n + minus_prev) / (1.0 - minus_prev),
                       BoundKind::loose);
}

inline constexpr int kHorizonSearchCap = 10000;

struct Horizon {
    int value = 0;
    int lower_valid = 0;        // largest n with 1 - L(n;-) > 0
    int denominator_valid = 0;  // largest n with 1 - L(n-1;-) > 0
    int upper_below_one = 0;    // largest n with the loose upper bound below one
};

/// Largest number of excitations for which the loose bounds stay meaningful,
/// min of the three validity conditions, searched up to kHorizonSearchCap.
inline Horizon n_limit(double q, double gamma) {
    detail::check_probability(q);
    detail::check_ratio(gamma);
    const auto logs = log_crossing_counts(kHorizonSearchCap);
    auto log_sum = [&](int n, bool even) { return detail::log_loose_sum(n, even, gamma, logs); };
    auto lower_ok = [&](int n) { return log_sum(n, false) < 0.0; };
    auto denominator_ok = [&](int n) { return log_sum(n - 1, false) < 0.0; };
    auto upper_ok = [&](int n) {
        if (!denominator_ok(n)) return false;
        const double minus_prev = std::exp(log_sum(n - 1, false));
        const double log_numerator = std::log1p(std::exp(std::min(log_sum(n, true), 700.0)));
        return std::log(q) + log_numerator - std::log1p(-minus_prev) < 0.0;
    };
    // each condition holds up to some n and fails beyond it
    auto largest = [](auto&& holds) {
        if (!holds(1)) return 0;
        if (holds(kHorizonSearchCap)) return kHorizonSearchCap;
        int good = 1;
        int bad = kHorizonSearchCap;
        while (bad - good > 1) {
            const int mid = good + (bad - good) / 2;
            (holds(mid) ? good : bad) = mid;
        }
        return good;
    };
    Horizon h;
    h.lower_valid = largest(lower_ok);
    h.denominator_valid = largest(denominator_ok);
    h.upper_below_one = largest(upper_ok);
    h.value = std::min({h.lower_valid, h.denominator_valid, h.upper_below_one});
    return h;
}

// ---------------------------------------------------------------------------
// Interval-resolved bounds

using KernelFunction = std::function<double(double)>;

/// Checks that the kernel is negative and non-decreasing on [from, to].
inline void check_negative_increasing(const KernelFunction& kernel, double from, double to) {
    constexpr int samples = 512;
    double previous = kernel(from);
    for (int i = 0; i <= samples; ++i) {
        const double s = from * std::pow(to / from, static_cast<double>(i) / samples);
        const double value = kernel(s);
        if (!(value <= 0.0))
            throw Error(ErrorKind::hypothesis_violation, "kernel is not negative at s = " + std::to_string(s));
        if (value < previous)
            throw Error(ErrorKind::hypothesis_violation, "kernel decreases near s = " + std::to_string(s));
        previous = value;
    }
}

/// Ratios gamma_ij = W(T |i-j| - T_on) / W(T_on) of a kernel on a schedule.
class GammaProfile {
public:
    GammaProfile(KernelFunction kernel, const RepetitionSchedule& schedule)
        : kernel_(std::move(kernel)), schedule_(schedule) {
        validate(schedule_);
        const double span = schedule_.period() * static_cast<double>(std::max<std::int64_t>(schedule_.count, 2));
        check_negative_increasing(kernel_, 0.25 * std::min(schedule_.on_time, schedule_.off_time), span);
        reference_ = kernel_(schedule_.on_time);
        if (!(gamma() < 1.0))
            throw Error(ErrorKind::hypothesis_violation, "gamma >= 1: measurement windows too short for the bounds");
    }

    GammaProfile(const Worldline& worldline, const RepetitionSchedule& schedule)
        : GammaProfile([worldline](double s) { return separated_kernel(worldline, s); }, schedule) {}

    double gamma() const { return kernel_(schedule_.off_time) / reference_; }

    double pair_ratio(std::int64_t i, std::int64_t j) const {
        const double separation = schedule_.period() * static_cast<double>(std::llabs(i - j)) - schedule_.on_time;
        if (i == j || !(separation > 0.0)) throw Error(ErrorKind::domain, "pair ratio needs distinct intervals");
        return kernel_(separation) / reference_;
    }

private:
    KernelFunction kernel_;
    RepetitionSchedule schedule_;
    double reference_ = 0.0;
};

inline double gamma_of(const Worldline& worldline, const RepetitionSchedule& schedule) {
    return GammaProfile(worldline, schedule).gamma();
}

/// Bound on |F| over the given intervals: the sum of cyclic ratio monomials
/// of every restricted partition, each weighted by its multiplicity.
inline double fraction_bound(std::span<const std::int64_t> labels, const GammaProfile& profile) {
    const int k = static_cast<int>(labels.size());
    std::vector<int> small(labels.begin(), labels.end());
    double total = 0.0;
    for (const auto& partition : restricted_partitions(k)) {
        for (const auto& monomial : cyclic_bound_terms(partition, small)) {
            double product = static_cast<double>(monomial.multiplicity);
            for (auto [i, j] : monomial.factors) product *= profile.pair_ratio(i, j);
            total += product;
        }
    }
    return total;
}

inline constexpr int kMaxTightOrder = 4;

/// Interval-resolved bracket: each F of even size lies in [0, bound], each of
/// odd size in [-bound, 0]; numerator and denominator take their extremes.
inline BoundPair tight_bounds(const HistoryRecord& history, double q, const GammaProfile& profile) {
    validate(history);
    detail::check_probability(q);
    const int n = history.order();
    if (n > kMaxTightOrder) {
        BoundPair loose = loose_bounds(n, q, profile.gamma());
        loose.fallback = true;
        loose.note = "tight bounds are tabulated up to n = 4; loose bounds returned";
        return loose;
    }
    if (n == 1) return make_bounds(q, 0.0, 0.0, BoundKind::tight);
    const auto labels = history.all();
    double even_all = 0.0, odd_all = 0.0, even_prior = 0.0, odd_prior = 0.0;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        const int size = __builtin_popcount(mask);
        if (size < 2) continue;
        std::vector<std::int64_t> subset;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) subset.push_back(labels[i]);
        const double bound = fraction_bound(subset, profile);
        const bool in_prior = !(mask & (1u << (n - 1)));
        (size % 2 == 0 ? even_all : odd_all) += bound;
        if (in_prior) (size % 2 == 0 ? even_prior : odd_prior) += bound;
    }
    if (!(1.0 - odd_prior > 0.0)) throw Error(ErrorKind::horizon_exceeded, "tight bound denominator is not positive");
    return make_bounds(q, -(odd_all + even_prior) / (1.0 + even_prior), (even_all + odd_prior) / (1.0 - odd_prior),
                       BoundKind::tight);
}

/// Tight bounds for a kernel given as a function; when the kernel breaks the
/// negative-increasing assumption the loose bounds are returned with a note.
inline BoundPair tight_bounds(const HistoryRecord& history, double q, const KernelFunction& kernel,
                              const RepetitionSchedule& schedule, double fallback_gamma) {
    try {
        return tight_bounds(history, q, GammaProfile(kernel, schedule));
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::hypothesis_violation) throw;
        BoundPair loose = loose_bounds(history.order(), q, fallback_gamma);
        loose.fallback = true;
        loose.note = std::string("warning: ") + e.what() + "; loose bounds returned";
        return loose;
    }
}

inline BoundPair tight_bounds(const HistoryRecord& history, double q, const Worldline& worldline,
                              const RepetitionSchedule& schedule) {
    return tight_bounds(history, q, GammaProfile(worldline, schedule));
}

}  // namespace udwrm
