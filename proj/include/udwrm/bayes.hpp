#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "udwrm/error.hpp"
#include "udwrm/quadrature.hpp"
#include "udwrm/strings.hpp"

namespace udwrm {

/// Joint posterior density over {H1: Born, H2: corrected} x q on a uniform
/// grid of [0, 1], integrated with the trapezoid rule.
struct Posterior {
    std::vector<double> q;
    std::vector<double> weight;  // trapezoid weights
    std::vector<double> born;
    std::vector<double> corrected;

    double mass_born() const { return integrate(born); }
    double mass_corrected() const { return integrate(corrected); }
    double total_mass() const { return mass_born() + mass_corrected(); }

    double integrate(std::span<const double> density) const {
        CompensatedSum sum;
        for (std::size_t i = 0; i < density.size(); ++i) sum.add(weight[i] * density[i]);
        return sum.value();
    }
};

inline constexpr int kDefaultGridSize = 1024;

/// Each hypothesis gets mass 1/2 spread uniformly over q.
inline Posterior uniform_prior(int grid_size = kDefaultGridSize) {
    if (grid_size < 2) throw Error(ErrorKind::input, "posterior grid needs at least two points");
    Posterior p;
    const double h = 1.0 / (grid_size - 1);
    for (int i = 0; i < grid_size; ++i) {
        p.q.push_back(i * h);
        p.weight.push_back(i == 0 || i == grid_size - 1 ? 0.5 * h : h);
    }
    p.born.assign(static_cast<std::size_t>(grid_size), 0.5);
    p.corrected.assign(static_cast<std::size_t>(grid_size), 0.5);
    const double mass = p.total_mass();
    for (auto* density : {&p.born, &p.corrected})
        for (double& v : *density) v /= mass;
    return p;
}

enum class CorrectionOrder { first = 1, second = 2 };

/// Likelihood of the corrected hypothesis: P_q(B) + epsilon^order * delta_p(q, B).
struct CorrectionModel {
    double epsilon = 0.0;
    std::function<double(double, const BitString&)> delta_p;
    CorrectionOrder order = CorrectionOrder::first;

    double scale() const { return order == CorrectionOrder::second ? epsilon * epsilon : epsilon; }
};

/// Bayes update with one observed string, renormalised over both hypotheses.
inline Posterior update_posterior(const Posterior& prior, const BitString& bits, const CorrectionModel& model) {
    Posterior next = prior;
    for (std::size_t i = 0; i < prior.q.size(); ++i) {
        const double born = born_string_prob(bits, prior.q[i]);
        double corrected = born;
        if (model.epsilon != 0.0) {
            if (!model.delta_p) throw Error(ErrorKind::input, "correction model has no delta_p");
            corrected += model.scale() * model.delta_p(prior.q[i], bits);
        }
        if (corrected < 0.0) throw Error(ErrorKind::input, "correction model gives a negative likelihood");
        next.born[i] *= born;
        next.corrected[i] *= corrected;
    }
    const double mass = next.total_mass();
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw Error(ErrorKind::degenerate_evidence, "observed string has zero likelihood under every hypothesis");
    for (auto* density : {&next.born, &next.corrected})
        for (double& v : *density) v /= mass;
    return next;
}

enum class Verdict { indistinguishable, h2_selected };

inline const char* to_string(Verdict verdict) noexcept {
    return verdict == Verdict::h2_selected ? "h2_selected" : "indistinguishable";
}

/// The corrected hypothesis is selected for all practical purposes only when
/// its relative deviation reaches kappa: |dP|/P >= kappa/eps at first order,
/// or |d2P|/P >= kappa/eps^2 at second order.
inline Verdict fapp_verdict(double probability, double delta_p, double epsilon, double kappa = 1.0,
                            std::optional<double> delta2_p = std::nullopt) {
    if (!(probability > 0.0)) throw Error(ErrorKind::domain, "probability must be > 0");
    if (!(kappa > 0.0)) throw Error(ErrorKind::domain, "kappa must be > 0");
    if (epsilon == 0.0) return Verdict::indistinguishable;
    const double eps = std::abs(epsilon);
    if (std::abs(delta_p) / probability >= kappa / eps) return Verdict::h2_selected;
    if (delta2_p && std::abs(*delta2_p) / probability >= kappa / (eps * eps)) return Verdict::h2_selected;
    return Verdict::indistinguishable;
}

/// Per-step pair of values indexed by outcome 0 or 1.
using OutcomePair = std::array<double, 2>;

/// First-order change of a string probability: sum over steps j of the
/// step's correction for outcome b_j times the unperturbed probabilities of
/// every other step.
inline double delta_p_first_order(std::span<const OutcomePair> corrections, std::span<const OutcomePair> probabilities,
                                  const BitString& bits) {
    const auto length = static_cast<std::size_t>(bits.length());
    if (corrections.size() != length || probabilities.size() != length)
        throw Error(ErrorKind::input, "per-step corrections must match the string length");
    std::vector<double> prefix(length + 1, 1.0);
    std::vector<double> suffix(length + 1, 1.0);
    for (std::size_t j = 0; j < length; ++j) prefix[j + 1] = prefix[j] * probabilities[j][bits[static_cast<int>(j)]];
    for (std::size_t j = length; j-- > 0;) suffix[j] = suffix[j + 1] * probabilities[j][bits[static_cast<int>(j)]];
    CompensatedSum sum;
    for (std::size_t j = 0; j < length; ++j)
        sum.add(corrections[j][bits[static_cast<int>(j)]] * prefix[j] * suffix[j + 1]);
    return sum.value();
}

/// Same with identical Born probabilities (1 - q, q) at every step.
inline double delta_p_first_order(std::span<const OutcomePair> corrections, double q, const BitString& bits) {
    std::vector<OutcomePair> probabilities(static_cast<std::size_t>(bits.length()), OutcomePair{1.0 - q, q});
    return delta_p_first_order(corrections, probabilities, bits);
}

}  // namespace udwrm
