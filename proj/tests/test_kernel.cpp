#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "udwrm/kernel.hpp"
#include "udwrm/quadrature.hpp"

using namespace udwrm;

namespace {

constexpr double pi = std::numbers::pi;

}  // namespace

TEST_CASE("inertial kernel tends to -1/(4 pi^2 s^2)") {
    const WightmanKernel k{Inertial{}, 1e-7};
    const auto w = eval_kernel(k, 1.0);
    CHECK(w.real() == Catch::Approx(-1.0 / (4.0 * pi * pi)).epsilon(1e-12));
    CHECK(w.real() == Catch::Approx(-2.533e-2).epsilon(1e-3));
    CHECK(separated_kernel(Inertial{}, 2.0) == Catch::Approx(0.25 * separated_kernel(Inertial{}, 1.0)));
}

TEST_CASE("kernels are hermitian in the time difference") {
    for (const Worldline& line : {Worldline{Inertial{}}, Worldline{Accelerated{0.1}}, Worldline{Accelerated{2.0}}}) {
        const WightmanKernel k{line, 0.05};
        for (double s : {0.01, 0.3, 1.0, 7.5, 40.0}) {
            const auto forward = eval_kernel(k, s);
            const auto backward = eval_kernel(k, -s);
            CHECK(backward.real() == Catch::Approx(forward.real()).epsilon(1e-12));
            CHECK(backward.imag() == Catch::Approx(-forward.imag()).epsilon(1e-12));
        }
    }
}

TEST_CASE("small acceleration reduces to the inertial kernel") {
    const double alpha = 1e-3;
    const double inertial = separated_kernel(Inertial{}, 1.0);
    const double accelerated = separated_kernel(Accelerated{alpha}, 1.0);
    // sinh expansion: relative difference alpha^2 s^2 / 12
    CHECK(std::abs(accelerated / inertial - 1.0) < 2.0 * alpha * alpha / 12.0);
    CHECK(std::abs(accelerated / inertial - 1.0) > 0.5 * alpha * alpha / 12.0);
}

TEST_CASE("kernel rejects a non-positive regulator and acceleration") {
    CHECK_THROWS_AS(eval_kernel(WightmanKernel{Inertial{}, 0.0}, 1.0), Error);
    CHECK_THROWS_AS(eval_kernel(WightmanKernel{Accelerated{0.0}, 0.1}, 1.0), Error);
    CHECK_THROWS_AS(separated_kernel(Inertial{}, 0.0), Error);
}

TEST_CASE("stationarity: the kernel depends only on the time difference") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> time(0.0, 300.0);
    const WightmanKernel k{Accelerated{0.1}, 0.1};
    for (int i = 0; i < 50; ++i) {
        const double t1 = time(rng);
        const double t2 = time(rng);
        const double shift = time(rng);
        const auto a = eval_kernel(k, (t2 + shift) - (t1 + shift));
        const auto b = eval_kernel(k, t2 - t1);
        CHECK(std::abs(a - b) <= 1e-9 * std::abs(b));
    }
}

TEST_CASE("separated kernels are negative and increasing") {
    for (const Worldline& line : {Worldline{Inertial{}}, Worldline{Accelerated{0.1}}}) {
        double previous = separated_kernel(line, 0.1);
        CHECK(previous < 0.0);
        for (double s = 0.2; s < 500.0; s *= 1.3) {
            const double value = separated_kernel(line, s);
            CHECK(value < 0.0);
            CHECK(value > previous);
            previous = value;
        }
    }
}

TEST_CASE("regulator sequence extrapolates to the separated kernel") {
    for (const Worldline& line : {Worldline{Inertial{}}, Worldline{Accelerated{0.1}}}) {
        std::vector<double> values;
        for (int j = 0; j < 5; ++j) values.push_back(eval_kernel(WightmanKernel{line, std::ldexp(0.05, -j)}, 2.0).real());
        const auto limit = richardson_limit(values);
        CHECK(limit.value == Catch::Approx(separated_kernel(line, 2.0)).epsilon(1e-9));
    }
}

TEST_CASE("accelerated kernel is periodic in imaginary time") {
    const double alpha = 0.5;
    const double beta = 2.0 * pi / alpha;
    for (double s : {-3.0, 0.4, 2.0, 9.0}) {
        const auto a = eval_kernel_shifted(Accelerated{alpha}, s, 0.3);
        const auto b = eval_kernel_shifted(Accelerated{alpha}, s, 0.3 + beta);
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
    }
    const auto inertial_a = eval_kernel_shifted(Inertial{}, 1.0, 0.3);
    const auto inertial_b = eval_kernel_shifted(Inertial{}, 1.0, 0.3 + beta);
    CHECK(std::abs(inertial_a - inertial_b) > 1e-3 * std::abs(inertial_a));
}

TEST_CASE("extreme-point values") {
    const auto schedule = default_schedule(1.0, 8);
    CHECK(extreme_point_value(Inertial{}, schedule, 2, 3) == Catch::Approx(separated_kernel(Inertial{}, 80.0)));
    CHECK(extreme_point_value(Inertial{}, schedule, 5, 1) ==
          Catch::Approx(separated_kernel(Inertial{}, 4.0 * 88.0 - 8.0)));
    double previous = extreme_point_value(Accelerated{0.1}, schedule, 0, 1);
    for (int j = 2; j < 8; ++j) {
        const double value = extreme_point_value(Accelerated{0.1}, schedule, 0, j);
        CHECK(std::abs(value) < std::abs(previous));
        previous = value;
    }
    CHECK_THROWS_AS(extreme_point_value(Inertial{}, schedule, 3, 3), Error);
}

TEST_CASE("Unruh temperature and detailed balance") {
    CHECK(*unruh_temperature(Accelerated{0.1}) == Catch::Approx(1.5915e-2).epsilon(1e-4));
    CHECK(*unruh_temperature(Accelerated{2.0 * pi}) == Catch::Approx(1.0));
    CHECK_FALSE(unruh_temperature(Inertial{}).has_value());
    CHECK(detailed_balance_ratio(Accelerated{0.1}, 0.2) == Catch::Approx(std::exp(-4.0 * pi)));
    CHECK(detailed_balance_ratio(Accelerated{0.1}, 0.2) == Catch::Approx(3.49e-6).epsilon(1e-3));
    CHECK(detailed_balance_ratio(Inertial{}, 0.2) == 0.0);
}
