#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "udwrm/strings.hpp"

using namespace udwrm;

namespace {

ResponseModel make_model(const Worldline& line) {
    ResponseContext ctx{WightmanKernel{line, 0.1}, default_schedule(1.0, 8), DetectorParams{0.2, 1e-2}, {}, QSource::closed_form, {}};
    ctx.quadrature.qmc_log2_points = 16;
    return ResponseModel(ctx);
}

}  // namespace

TEST_CASE("bit strings round-trip through ids and positions") {
    const auto twelve = BitString::from_id(4, 12);
    CHECK(twelve.text() == "1100");
    CHECK(twelve.positions() == std::vector<int>{1, 2});
    CHECK(BitString::from_id(4, 3).text() == "0011");
    CHECK(BitString::from_id(4, 6).text() == "0110");
    CHECK(BitString::from_positions(4, {2, 3}) == BitString::from_id(4, 6));
    for (std::uint64_t id = 0; id < 64; ++id) {
        const auto b = BitString::from_id(6, id);
        CHECK(b.id() == id);
        CHECK(BitString::from_positions(6, b.positions()) == b);
    }
    CHECK_THROWS_AS(BitString::from_id(3, 8), Error);
    CHECK_THROWS_AS(BitString::from_positions(4, {3, 2}), Error);
    CHECK_THROWS_AS(BitString::from_positions(4, {5}), Error);
    CHECK_THROWS_AS(BitString(std::vector<std::uint8_t>{0, 2}), Error);
}

TEST_CASE("Born probabilities form a distribution") {
    for (double q : {0.0, 1e-6, 0.1, 0.5, 1.0}) {
        double total = 0.0;
        for (std::uint64_t id = 0; id < 32; ++id) total += born_string_prob(BitString::from_id(5, id), q);
        CHECK(total == Catch::Approx(1.0).epsilon(1e-14));
    }
    CHECK(born_string_prob(BitString::from_id(4, 12), 0.1) == Catch::Approx(0.01 * 0.81));
    CHECK_THROWS_AS(born_string_prob(BitString::from_id(1, 1), 1.5), Error);
}

TEST_CASE("a single measurement follows the Born rule") {
    auto model = make_model(Accelerated{0.1});
    for (std::uint64_t id : {0u, 1u}) {
        const auto e = rm_string_prob(BitString::from_id(1, id), model);
        CHECK(e.log_ratio == 0.0);
        CHECK(e.rm() == e.born);
    }
}

TEST_CASE("repeated-measurement probabilities are normalised") {
    for (const Worldline& line : {Worldline{Inertial{}}, Worldline{Accelerated{0.1}}}) {
        auto model = make_model(line);
        for (int length : {2, 3}) {
            CompensatedSum total;
            double error = 0.0;
            for (std::uint64_t id = 0; id < (1u << length); ++id) {
                const auto e = rm_string_prob(BitString::from_id(length, id), model);
                total.add(e.rm());
                error += e.abs_error;
            }
            CHECK(std::abs(total.value() - 1.0) <= 10.0 * error);
        }
    }
}

TEST_CASE("corrections stay inside the ratio bracket") {
    auto model = make_model(Inertial{});
    const double gamma = gamma_of(Inertial{}, model.context().schedule);
    for (std::uint64_t id = 0; id < 8; ++id) {
        const auto bits = BitString::from_id(3, id);
        const auto e = rm_string_prob(bits, model);
        const auto bracket = ratio_bounds(bits, model.q(), gamma);
        const double ratio = std::exp(e.log_ratio);
        CHECK(bracket.lower <= ratio);
        CHECK(ratio <= bracket.upper);
    }
    CHECK(ratio_bounds(BitString{}, 0.1, 0.01).upper == 1.0);
    std::vector<std::uint8_t> long_string(60, 0);
    CHECK_THROWS_AS(ratio_bounds(BitString(long_string), 0.1, 0.01), Error);
}

TEST_CASE("the ratio bracket widens with the deviations") {
    const auto bits = BitString::from_id(4, 5);
    const auto narrow = ratio_bounds(bits, 1e-3, 1e-3, 0.1);
    const auto wide = ratio_bounds(bits, 1e-2, 1e-2, 0.1);
    CHECK(wide.lower < narrow.lower);
    CHECK(wide.upper > narrow.upper);
    const auto none = ratio_bounds(bits, 0.0, 0.0, 0.1);
    CHECK(none.lower == 1.0);
    CHECK(none.upper == 1.0);
}

TEST_CASE("excitation rate report") {
    const auto r = rate_report(BitString::from_id(4, 6), 0.1, Accelerated{0.1}, 0.2);
    CHECK(r.sampled == 1.0);
    CHECK(r.theoretical == Catch::Approx(0.1 / 0.9));
    CHECK(r.infinite_time_reference == Catch::Approx(std::exp(-4.0 * std::acos(-1.0))));
    CHECK(std::isinf(rate_report(BitString::from_id(2, 3), 0.1, Inertial{}, 0.2).sampled));
    CHECK_THROWS_AS(rate_report(BitString{}, 0.1, Inertial{}, 0.2), Error);
}

TEST_CASE("accelerated strings with adjacent ones carry larger corrections") {
    auto model = make_model(Accelerated{0.1});
    const auto adjacent = rm_string_prob(BitString::from_id(4, 12), model);
    const auto apart = rm_string_prob(BitString::from_id(4, 9), model);
    CHECK(adjacent.log_ratio > apart.log_ratio);
    CHECK(adjacent.log_ratio > 0.0);
}

TEST_CASE("strings longer than the schedule or the cap are rejected") {
    ResponseContext ctx{WightmanKernel{Inertial{}, 0.1}, default_schedule(1.0, 3), DetectorParams{}, {}, QSource::closed_form, {}};
    ResponseModel model(ctx);
    CHECK_THROWS_AS(rm_string_prob(BitString::from_id(4, 1), model), Error);
    auto big = make_model(Inertial{});
    CHECK_THROWS_AS(rm_string_prob(BitString::from_id(7, 1), big), Error);
}
