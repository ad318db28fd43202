#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "udwrm/bayes.hpp"
#include "udwrm/bounds.hpp"
#include "udwrm/combinatorics.hpp"
#include "udwrm/oracle.hpp"
#include "udwrm/response.hpp"
#include "udwrm/strings.hpp"

using namespace udwrm;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double seconds_limit;
    std::function<Outcome()> run;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

ResponseContext default_context(const Worldline& line, std::int64_t count = 8) {
    return {WightmanKernel{line, 0.1}, default_schedule(1.0, count), DetectorParams{0.2, 1e-2}, {}, QSource::closed_form, {}};
}

const RepetitionSchedule kGaussianSchedule{8.0, 80.0, 4, Gaussian{1.0}};

Outcome combinatorics_golden() {
    const std::vector<std::size_t> pi_r{1, 1, 2, 2, 4, 4, 7};
    const std::vector<unsigned long> crossings{2, 8, 60, 544, 6040, 79008, 1190672};
    std::ostringstream bad;
    for (int k = 2; k <= 8; ++k) {
        const auto i = static_cast<std::size_t>(k - 2);
        if (restricted_partitions(k).size() != pi_r[i]) bad << " pi_r(" << k << ")";
        if (crossing_count(k) != crossings[i]) bad << " c(" << k << ")";
    }
    if (partition_term_count({4}) != 48) bad << " N(4)";
    if (partition_term_count({2, 2}) != 12) bad << " N(2,2)";
    if (wick_term_count(2) != 3) bad << " wick(2)";
    if (wick_term_count(3) != 15) bad << " wick(3)";
    const std::string mismatches = bad.str();
    return {mismatches.empty(), mismatches.empty() ? "all values exact" : "mismatch:" + mismatches};
}

Outcome decomposition_identity() {
    using boost::multiprecision::cpp_int;
    for (int n = 0; n <= 12; ++n) {
        cpp_int sum = 0;
        cpp_int binomial = 1;
        for (int k = 0; k <= n; ++k) {
            sum += binomial * cpp_int(to_string(crossing_count(k)));
            binomial = binomial * (n - k) / (k + 1);
        }
        if (sum != cpp_int(to_string(wick_term_count(n))))
            return {false, "identity fails at n = " + std::to_string(n)};
    }
    return {true, "exact for n <= 12"};
}

Outcome horizon() {
    const auto h = n_limit(0.1, 0.01);
    int first_above = 0;
    for (int n = 1; n <= 60 && first_above == 0; ++n)
        if (loose_bounds(n, 0.1, 0.01).upper > 1.0) first_above = n;
    const bool passed = h.value == 55 && first_above == 56;
    std::ostringstream s;
    s << "n_limit = " << h.value << " (expected 55), first upper > 1 at n = " << first_above
      << " (expected 56); upper(54) = " << fmt(loose_bounds(54, 0.1, 0.01).upper)
      << ", upper(55) = " << fmt(loose_bounds(55, 0.1, 0.01).upper) << ", lower valid to " << h.lower_valid
      << ", denominator valid to " << h.denominator_valid;
    return {passed, s.str()};
}

Outcome closed_vs_quadrature() {
    const DetectorParams d{0.2, 1e-2};
    const double closed = q_closed_inertial(d, 1.0).value;
    const auto direct = q_direct(WightmanKernel{Inertial{}, 0.1}, kGaussianSchedule, d);
    const double rel = std::abs(direct.value / closed - 1.0);
    return {rel <= 1e-6, "closed " + fmt(closed) + ", quadrature " + fmt(direct.value) + ", relative " + fmt(rel)};
}

Outcome accelerated_consistency() {
    const DetectorParams d{0.2, 1e-2};
    const double inertial = q_closed_inertial(d, 1.0).value;
    const double slow = q_closed_accelerated(d, 1.0, 1e-3).value;
    const double rel_slow = std::abs(slow / inertial - 1.0);
    const double closed = q_closed_accelerated(d, 1.0, 0.1).value;
    const auto direct = q_direct(WightmanKernel{Accelerated{0.1}, 0.1}, kGaussianSchedule, d);
    const double rel_direct = std::abs(direct.value / closed - 1.0);
    return {rel_slow <= 1e-6 && rel_direct <= 1e-4,
            "alpha = 1e-3 vs inertial " + fmt(rel_slow) + ", alpha = 0.1 closed vs quadrature " + fmt(rel_direct)};
}

Outcome bound_containment() {
    int checked = 0;
    std::ostringstream bad;
    for (const Worldline& line : {Worldline{Inertial{}}, Worldline{Accelerated{0.1}}}) {
        auto ctx = default_context(line);
        ctx.quadrature.qmc_log2_points = 20;
        ResponseModel model(ctx);
        const GammaProfile profile(line, ctx.schedule);
        for (unsigned mask = 1; mask < 256u; ++mask) {
            if (__builtin_popcount(mask) > 3) continue;
            std::vector<std::int64_t> set;
            for (std::int64_t i = 0; i < 8; ++i)
                if (mask & (1u << i)) set.push_back(i);
            HistoryRecord h{{set.begin(), set.end() - 1}, set.back()};
            const auto p = model.conditional_excitation(h);
            const auto tight = tight_bounds(h, model.q(), profile);
            const auto loose = loose_bounds(h.order(), model.q(), profile.gamma());
            const double slack = p.abs_error / model.q();
            const bool inside = tight.rel_lower - slack <= p.relative_correction &&
                                p.relative_correction <= tight.rel_upper + slack;
            const double rounding = 1e-12 * std::abs(loose.rel_upper);
            const bool nested = loose.rel_lower - rounding <= tight.rel_lower &&
                                tight.rel_upper <= loose.rel_upper + rounding;
            if (!inside || !nested) bad << " " << (line.index() ? "acc" : "in") << ":mask" << mask;
            ++checked;
        }
    }
    const std::string failures = bad.str();
    return {failures.empty(), std::to_string(checked) + " histories" + (failures.empty() ? "" : "; outside:" + failures)};
}

Outcome string_normalization() {
    std::ostringstream s;
    bool passed = true;
    for (const Worldline& line : {Worldline{Inertial{}}, Worldline{Accelerated{0.1}}}) {
        auto ctx = default_context(line);
        ResponseModel model(ctx);
        CompensatedSum total;
        double error = 0.0;
        for (std::uint64_t id = 0; id < 16; ++id) {
            const auto e = rm_string_prob(BitString::from_id(4, id), model);
            total.add(e.rm());
            error += e.abs_error;
        }
        const double defect = std::abs(total.value() - 1.0);
        passed = passed && defect <= 10.0 * error;
        s << (line.index() ? " accelerated" : "inertial") << " |sum - 1| = " << fmt(defect) << " vs 10 x error "
          << fmt(10.0 * error) << ";";
    }
    return {passed, s.str()};
}

Outcome length4_structure() {
    auto inertial = ResponseModel(default_context(Inertial{}));
    std::vector<std::uint64_t> positive;
    double worst = -1.0;
    for (std::uint64_t id = 0; id < 16; ++id) {
        const auto e = rm_string_prob(BitString::from_id(4, id), inertial);
        if (e.log_ratio > 0.0) positive.push_back(id);
        worst = std::max(worst, e.log_ratio);
    }
    const bool part_a = positive.empty();

    auto accelerated = ResponseModel(default_context(Accelerated{0.1}));
    auto log_ratio = [&](std::uint64_t id) { return rm_string_prob(BitString::from_id(4, id), accelerated).log_ratio; };
    double adjacent_min = INFINITY, apart_max = -INFINITY, adjacent_sum = 0.0, apart_sum = 0.0;
    for (std::uint64_t id : {3u, 6u, 12u}) {
        const double v = log_ratio(id);
        adjacent_min = std::min(adjacent_min, v);
        adjacent_sum += v;
    }
    for (std::uint64_t id : {5u, 9u, 10u}) {
        const double v = log_ratio(id);
        apart_max = std::max(apart_max, v);
        apart_sum += v;
    }
    const bool part_b = adjacent_min > apart_max;

    std::ostringstream s;
    s << "(a) " << (part_a ? "pass" : "fail") << ": inertial strings with positive log-ratio {";
    for (std::size_t i = 0; i < positive.size(); ++i) s << (i ? "," : "") << positive[i];
    s << "}, largest " << fmt(worst) << "; (b) " << (part_b ? "pass" : "fail") << ": adjacent min " << fmt(adjacent_min)
      << " vs apart max " << fmt(apart_max) << " (sums " << fmt(adjacent_sum) << " vs " << fmt(apart_sum) << ")";
    return {part_a && part_b, s.str()};
}

Outcome oracle_suite() {
    oracle::InstanceOptions opts;
    opts.environment_dim = 8;
    opts.steps = 10;
    double worst_norm = 0.0;
    double ratio_min = INFINITY, ratio_max = -INFINITY;
    double worst_spread = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = oracle::random_model(opts, seed);
        CompensatedSum sum;
        for (double p : oracle::string_distribution(m, 10)) sum.add(p);
        worst_norm = std::max(worst_norm, std::abs(sum.value() - 1.0));

        auto residual = [&](double eps) {
            const auto scaled = oracle::with_coupling(m, eps);
            const auto exact = oracle::step_distribution(oracle::step_unitary(scaled, 0), scaled.initial_environment);
            const auto t = oracle::perturbative_corrections(scaled, 0, scaled.initial_environment);
            return std::abs(exact.probability[1] - t.born[1] - eps * t.first[1] - eps * eps * t.second[1]);
        };
        const double ratio = residual(1e-2) / residual(5e-3);
        ratio_min = std::min(ratio_min, ratio);
        ratio_max = std::max(ratio_max, ratio);

        const auto iid = oracle::iid_model(opts, seed);
        std::map<int, std::pair<double, double>> range;
        for (std::uint64_t id = 0; id < 16; ++id) {
            const auto bits = BitString::from_id(4, id);
            const double p = oracle::exact_string_prob(iid, bits);
            auto [it, fresh] = range.try_emplace(bits.ones(), p, p);
            it->second.first = std::min(it->second.first, p);
            it->second.second = std::max(it->second.second, p);
        }
        for (const auto& [ones, r] : range) worst_spread = std::max(worst_spread, r.second - r.first);
    }
    const bool passed = worst_norm <= 1e-10 && ratio_min >= 6.4 && ratio_max <= 9.6 && worst_spread <= 1e-12;
    return {passed, "normalization defect " + fmt(worst_norm) + ", halving ratios in [" + fmt(ratio_min) + ", " +
                        fmt(ratio_max) + "], i.i.d. permutation spread " + fmt(worst_spread)};
}

Outcome bayes_suite() {
    std::mt19937_64 rng(1);
    std::bernoulli_distribution outcome(0.2);
    auto stream = [&] {
        std::vector<std::uint8_t> bits(4);
        for (auto& b : bits) b = outcome(rng);
        return BitString(bits);
    };
    auto tilt = [](double q, const BitString& b) { return 0.05 * b.ones() * born_string_prob(b, q); };

    auto flat = uniform_prior();
    for (int i = 0; i < 1000; ++i) flat = update_posterior(flat, stream(), CorrectionModel{0.0, tilt});
    const double split = std::abs(flat.mass_born() - flat.mass_corrected());

    auto p = uniform_prior();
    double worst_mass = 0.0;
    for (int i = 0; i < 1000; ++i) {
        p = update_posterior(p, stream(), CorrectionModel{1e-2, tilt});
        worst_mass = std::max(worst_mass, std::abs(p.total_mass() - 1.0));
    }

    oracle::InstanceOptions opts;
    opts.environment_dim = 3;
    opts.steps = 4;
    const auto base = oracle::random_model(opts, 0);
    const auto zero = oracle::with_coupling(base, 0.0);
    std::vector<double> errors;
    for (double eps : {1e-3, 5e-4}) {
        const auto m = oracle::with_coupling(base, eps);
        std::vector<OutcomePair> corrections, probabilities;
        for (const auto& t : oracle::trajectory_corrections(m, 4)) {
            corrections.push_back(t.first);
            probabilities.push_back(t.born);
        }
        double worst = 0.0;
        for (std::uint64_t id = 0; id < 16; ++id) {
            const auto bits = BitString::from_id(4, id);
            const double exact = (oracle::exact_string_prob(m, bits) - oracle::exact_string_prob(zero, bits)) / eps;
            worst = std::max(worst, std::abs(exact - delta_p_first_order(corrections, probabilities, bits)));
        }
        errors.push_back(worst);
    }
    const double order = std::log2(errors[0] / errors[1]);
    const bool passed = split <= 1e-12 && worst_mass <= 1e-12 && std::abs(order - 1.0) <= 0.2;
    return {passed, "eps = 0 split " + fmt(split) + ", normalization drift " + fmt(worst_mass) +
                        ", delta-P error " + fmt(errors[0]) + " -> " + fmt(errors[1]) + " (order " + fmt(order) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: acceptance [--only N]\n");
            return 2;
        }
    }
    const std::vector<Criterion> criteria{
        {1, "combinatorics golden values", 1.0, combinatorics_golden},
        {2, "Wick count decomposition identity", 1.0, decomposition_identity},
        {3, "validity horizon at q = 0.1, gamma = 0.01", 1.0, horizon},
        {4, "inertial closed form vs quadrature", 30.0, closed_vs_quadrature},
        {5, "accelerated closed form consistency", 60.0, accelerated_consistency},
        {6, "conditional probabilities inside tight and loose bounds", 300.0, bound_containment},
        {7, "string probability normalization", 600.0, string_normalization},
        {8, "correction structure of length-4 strings", 900.0, length4_structure},
        {9, "finite-dimensional oracle suite", 120.0, oracle_suite},
        {10, "Bayesian update suite", 60.0, bayes_suite},
    };
    bool all = true;
    bool found = false;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        found = true;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = seconds <= c.seconds_limit;
        const bool passed = outcome.passed && in_time;
        std::printf("%s %d %s (%.2f s of %.0f s): %s%s\n", passed ? "PASS" : "FAIL", c.id, c.name.c_str(), seconds,
                    c.seconds_limit, outcome.detail.c_str(), in_time ? "" : "; over time limit");
        all = all && passed;
    }
    if (!found) {
        std::fprintf(stderr, "no criterion %d\n", only);
        return 2;
    }
    return all ? 0 : 1;
}
