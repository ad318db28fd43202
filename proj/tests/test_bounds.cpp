#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "udwrm/bounds.hpp"

using namespace udwrm;

namespace {

// Direct evaluation of the loose sums from the exact crossing counts.
double sum_by_parity(int n, bool even, double gamma) {
    double total = 0.0;
    for (int k = even ? 2 : 3; k <= n; k += 2)
        total += std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0)) *
                 static_cast<double>(crossing_count(k)) * std::pow(gamma, k);
    return total;
}

std::vector<HistoryRecord> histories_up_to(int max_order, std::int64_t intervals) {
    std::vector<HistoryRecord> out;
    for (unsigned mask = 1; mask < (1u << intervals); ++mask) {
        if (__builtin_popcount(mask) > max_order) continue;
        std::vector<std::int64_t> set;
        for (std::int64_t i = 0; i < intervals; ++i)
            if (mask & (1u << i)) set.push_back(i);
        const auto query = set.back();
        set.pop_back();
        out.push_back({set, query});
    }
    return out;
}

}  // namespace

TEST_CASE("loose bounds for one, two and three excitations") {
    const double q = 0.1;
    const double g = 0.05;
    const auto one = loose_bounds(1, q, g);
    CHECK(one.lower == q);
    CHECK(one.upper == q);

    const auto two = loose_bounds(2, q, g);
    CHECK(two.rel_lower == 0.0);
    CHECK(two.rel_upper == Catch::Approx(2.0 * g * g).epsilon(1e-13));

    const auto three = loose_bounds(3, q, g);
    CHECK(three.rel_upper == Catch::Approx(6.0 * g * g).epsilon(1e-13));
    CHECK(three.rel_lower == Catch::Approx(-(8.0 * g * g * g + 2.0 * g * g) / (1.0 + 2.0 * g * g)).epsilon(1e-13));
}

TEST_CASE("loose sums agree with the exact crossing counts") {
    for (double g : {0.0, 0.01, 0.1, 0.3})
        for (int n = 0; n <= 20; ++n)
            for (bool even : {true, false}) {
                const double expected = sum_by_parity(n, even, g);
                CHECK(loose_sum(n, even, g) == Catch::Approx(expected).epsilon(1e-12).margin(1e-300));
            }
    CHECK_THROWS_AS(loose_sum(3, true, 1.0), Error);
    CHECK_THROWS_AS(loose_sum(-1, true, 0.1), Error);
}

TEST_CASE("loose sums grow with n") {
    for (bool even : {true, false}) {
        double previous = 0.0;
        for (int n = 2; n < 60; ++n) {
            const double value = loose_sum(n, even, 0.01);
            CHECK(value >= previous);
            previous = value;
        }
    }
}

TEST_CASE("validity horizon") {
    const auto h = n_limit(0.1, 0.01);
    // the three conditions for q = 0.1, gamma = 0.01
    CHECK(h.upper_below_one == 54);
    CHECK(h.lower_valid == 55);
    CHECK(h.denominator_valid == 56);
    CHECK(h.value == 54);
    CHECK(loose_bounds(54, 0.1, 0.01).upper < 1.0);
    CHECK(loose_bounds(55, 0.1, 0.01).upper > 1.0);
    CHECK(loose_bounds(54, 0.1, 0.01).upper == Catch::Approx(0.6717).epsilon(1e-3));
    CHECK(loose_bounds(55, 0.1, 0.01).upper == Catch::Approx(1.1515).epsilon(1e-3));

    CHECK(n_limit(0.1, 0.0).value == kHorizonSearchCap);
    CHECK(n_limit(0.1, 0.02).value < h.value);
    CHECK(n_limit(0.05, 0.01).value >= h.value);
    CHECK_THROWS_AS(n_limit(0.0, 0.01), Error);
    CHECK_THROWS_AS(loose_bounds(57, 0.1, 0.01), Error);
}

TEST_CASE("tight bounds lie inside the loose ones") {
    const auto schedule = default_schedule(1.0, 8);
    for (const Worldline& line : {Worldline{Inertial{}}, Worldline{Accelerated{0.1}}}) {
        const GammaProfile profile(line, schedule);
        const double q = 1e-3;
        for (const auto& h : histories_up_to(4, 8)) {
            const auto tight = tight_bounds(h, q, profile);
            const auto loose = loose_bounds(h.order(), q, profile.gamma());
            CHECK(tight.kind == BoundKind::tight);
            // adjacent pairs make the two brackets coincide up to rounding
            const double slack = 1e-12 * std::abs(loose.rel_upper);
            CHECK(loose.rel_lower - slack <= tight.rel_lower);
            CHECK(tight.rel_upper <= loose.rel_upper + slack);
            CHECK(tight.rel_lower <= 0.0);
            CHECK(tight.rel_upper >= 0.0);
        }
    }
}

TEST_CASE("tight bounds of two excitations use the pair ratio") {
    const auto schedule = default_schedule(1.0, 8);
    const GammaProfile profile(Accelerated{0.1}, schedule);
    const auto b = tight_bounds({{2}, 5}, 0.1, profile);
    const double r = profile.pair_ratio(2, 5);
    CHECK(b.rel_lower == 0.0);
    CHECK(b.rel_upper == Catch::Approx(2.0 * r * r).epsilon(1e-14));
    CHECK(profile.pair_ratio(0, 1) == Catch::Approx(profile.gamma()).epsilon(1e-14));
    CHECK(profile.pair_ratio(0, 3) < profile.pair_ratio(0, 1));
}

TEST_CASE("four-excitation bound sums the cyclic terms") {
    const auto schedule = default_schedule(1.0, 8);
    const GammaProfile profile(Inertial{}, schedule);
    const std::vector<std::int64_t> labels{0, 1, 2, 3};
    auto r = [&](int i, int j) { return profile.pair_ratio(i, j); };
    const double cycles = 16.0 * (r(0, 1) * r(1, 2) * r(2, 3) * r(3, 0) + r(0, 1) * r(1, 3) * r(3, 2) * r(2, 0) +
                                  r(0, 2) * r(2, 1) * r(1, 3) * r(3, 0));
    const double pairs = 4.0 * (std::pow(r(0, 1) * r(2, 3), 2) + std::pow(r(0, 2) * r(1, 3), 2) +
                                std::pow(r(0, 3) * r(1, 2), 2));
    CHECK(fraction_bound(labels, profile) == Catch::Approx(cycles + pairs).epsilon(1e-13));
}

TEST_CASE("tight bounds fall back beyond four excitations") {
    const auto schedule = default_schedule(1.0, 8);
    const GammaProfile profile(Inertial{}, schedule);
    const auto b = tight_bounds({{0, 1, 2, 3}, 4}, 0.1, profile);
    CHECK(b.fallback);
    CHECK(b.kind == BoundKind::loose);
    CHECK_FALSE(b.note.empty());
    CHECK(b.rel_upper == loose_bounds(5, 0.1, profile.gamma()).rel_upper);
}

TEST_CASE("a kernel that is not negative and increasing degrades to loose bounds") {
    const auto schedule = default_schedule(1.0, 8);
    const KernelFunction oscillating = [](double s) { return -std::cos(s) / (s * s) - 2.0 / (s * s); };
    const auto b = tight_bounds({{0}, 1}, 0.1, oscillating, schedule, 0.01);
    CHECK(b.fallback);
    CHECK(b.note.rfind("warning:", 0) == 0);
    CHECK(b.rel_upper == loose_bounds(2, 0.1, 0.01).rel_upper);
    CHECK_THROWS_AS(GammaProfile(oscillating, schedule), Error);
}

TEST_CASE("gamma for the default schedule") {
    const auto schedule = default_schedule(1.0, 8);
    CHECK(gamma_of(Inertial{}, schedule) == Catch::Approx(1e-2).epsilon(1e-12));
    // the accelerated kernel decays exponentially, so its ratio is smaller
    CHECK(gamma_of(Accelerated{0.1}, schedule) < gamma_of(Inertial{}, schedule));
}
