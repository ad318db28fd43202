#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "udwrm/bounds.hpp"
#include "udwrm/error.hpp"
#include "udwrm/kernel.hpp"
#include "udwrm/quadrature.hpp"
#include "udwrm/response.hpp"

namespace udwrm {

inline constexpr int kMaxRmStringLength = 6;
inline constexpr int kMaxStringLength = 62;

/// Outcome string b_1..b_L of L consecutive measurements; b_1 is the most
/// significant bit of the base-10 id.
class BitString {
public:
    BitString() = default;

    explicit BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        if (bits_.size() > static_cast<std::size_t>(kMaxStringLength))
            throw Error(ErrorKind::range, "bit strings are limited to " + std::to_string(kMaxStringLength) + " bits");
        for (auto b : bits_)
            if (b > 1) throw Error(ErrorKind::input, "bits must be 0 or 1");
    }

    static BitString from_id(int length, std::uint64_t id) {
        if (length < 0 || length > kMaxStringLength) throw Error(ErrorKind::range, "bit string length out of range");
        if (length < 64 && id >> length) throw Error(ErrorKind::input, "id does not fit in the string length");
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(length));
        for (int j = 0; j < length; ++j) bits[j] = static_cast<std::uint8_t>((id >> (length - 1 - j)) & 1u);
        return BitString(std::move(bits));
    }

    /// Build from the 1-based positions of the ones.
    static BitString from_positions(int length, const std::vector<int>& positions) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(length), 0);
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const int p = positions[i];
            if (p < 1 || p > length || (i > 0 && p <= positions[i - 1]))
                throw Error(ErrorKind::input, "positions must be increasing within 1..L");
            bits[p - 1] = 1;
        }
        return BitString(std::move(bits));
    }

    int length() const noexcept { return static_cast<int>(bits_.size()); }
    int ones() const noexcept {
        int n = 0;
        for (auto b : bits_) n += b;
        return n;
    }
    std::uint8_t operator[](int j) const { return bits_.at(static_cast<std::size_t>(j)); }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    std::uint64_t id() const noexcept {
        std::uint64_t value = 0;
        for (auto b : bits_) value = (value << 1) | b;
        return value;
    }

    std::vector<int> positions() const {
        std::vector<int> result;
        for (int j = 0; j < length(); ++j)
            if (bits_[j]) result.push_back(j + 1);
        return result;
    }

    std::string text() const {
        std::string s;
        for (auto b : bits_) s.push_back(b ? '1' : '0');
        return s;
    }

    friend bool operator==(const BitString&, const BitString&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Probability of a string when every outcome is an independent Bernoulli(q).
inline double born_string_prob(const BitString& bits, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorKind::domain, "q must lie in [0, 1]");
    const int n = bits.ones();
    return std::pow(q, n) * std::pow(1.0 - q, bits.length() - n);
}

/// Repeated-measurement probability of a string, stored as its Born value and
/// the log of the ratio to it.
struct StringEvaluation {
    BitString bits;
    double born = 0.0;
    double log_ratio = 0.0;
    double abs_error = 0.0;  // on the RM probability
    Method method = Method::quadrature;

    double rm() const { return born * std::exp(log_ratio); }
};

/// Chain-rule probability: outcome j uses the conditional excitation given
/// the ones before j. Position j is measured after interval j - 1. Histories
/// longer than the conditional cap use the midpoint of the loose bounds.
inline StringEvaluation rm_string_prob(const BitString& bits, ResponseModel& model) {
    if (bits.length() > kMaxRmStringLength)
        throw Error(ErrorKind::range, "RM string probabilities are evaluated up to L = " +
                                          std::to_string(kMaxRmStringLength));
    if (bits.length() > model.context().schedule.count)
        throw Error(ErrorKind::input, "string is longer than the repetition schedule");
    const double q = model.q();
    StringEvaluation out{bits, born_string_prob(bits, q), 0.0, 0.0, Method::quadrature};
    const double q_ratio = q / (1.0 - q);
    double relative_error = 0.0;
    std::optional<double> gamma;
    HistoryRecord history;
    for (int j = 0; j < bits.length(); ++j) {
        history.query = j;
        double correction = 0.0;
        double correction_error = 0.0;
        if (history.order() <= kMaxConditionalOrder) {
            const auto p = model.conditional_excitation(history);
            correction = p.relative_correction;
            correction_error = p.abs_error / q;
        } else {
            if (!gamma) gamma = gamma_of(model.context().kernel.worldline, model.context().schedule);
            const auto loose = loose_bounds(history.order(), q, *gamma);
            correction = 0.5 * (loose.rel_lower + loose.rel_upper);
            correction_error = 0.5 * (loose.rel_upper - loose.rel_lower);
            out.method = Method::bound_midpoint;
        }
        if (bits[j]) {
            out.log_ratio += std::log1p(correction);
            relative_error += correction_error / (1.0 + correction);
            history.prior.push_back(j);
        } else {
            const double shrink = -q_ratio * correction;  // (1 - P) / (1 - q) - 1
            out.log_ratio += std::log1p(shrink);
            relative_error += q_ratio * correction_error / (1.0 + shrink);
        }
    }
    const double rm = out.rm();
    out.abs_error = rm * relative_error + 4.0 * bits.length() * std::numeric_limits<double>::epsilon() * rm;
    return out;
}

struct RatioBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Bracket on P_RM(B) / P_Born(B) from the largest relative deviations over
/// the horizon: upper_dev bounds P_n / q - 1 from above, lower_dev bounds
/// 1 - P_n / q, and odds = q / (1 - q).
inline RatioBounds ratio_bounds(const BitString& bits, double upper_dev, double lower_dev, double odds) {
    const int n = bits.ones();
    const int zeros = bits.length() - n;
    return {std::pow(1.0 - lower_dev, n) * std::pow(1.0 - odds * upper_dev, zeros),
            std::pow(1.0 + upper_dev, n) * std::pow(1.0 + odds * lower_dev, zeros)};
}

/// Ratio bracket with deviations taken from the loose bounds up to the
/// string length, which must stay below the horizon.
inline RatioBounds ratio_bounds(const BitString& bits, double q, double gamma) {
    const int length = bits.length();
    if (length < 1) return {1.0, 1.0};
    if (length >= n_limit(q, gamma).value)
        throw Error(ErrorKind::horizon_exceeded, "string length reaches the validity horizon");
    double upper_dev = 0.0;
    double lower_dev = 0.0;
    for (int n = 1; n <= length; ++n) {
        const auto b = loose_bounds(n, q, gamma);
        upper_dev = std::max(upper_dev, b.rel_upper);
        lower_dev = std::max(lower_dev, -b.rel_lower);
    }
    return ratio_bounds(bits, upper_dev, lower_dev, q / (1.0 - q));
}

/// Excitation-to-deexcitation ratios: observed in the string, expected from
/// q, and the detailed-balance value of the worldline at infinite time.
struct RateReport {
    double sampled = 0.0;  // +inf for a string of ones
    double theoretical = 0.0;
    double infinite_time_reference = 0.0;
};

inline RateReport rate_report(const BitString& bits, double q, const Worldline& worldline, double gap) {
    if (bits.length() == 0) throw Error(ErrorKind::input, "empty bit string");
    const int n = bits.ones();
    const int zeros = bits.length() - n;
    RateReport report;
    report.sampled = zeros == 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(n) / zeros;
    report.theoretical = q / (1.0 - q);
    report.infinite_time_reference = detailed_balance_ratio(worldline, gap);
    return report;
}

}  // namespace udwrm
