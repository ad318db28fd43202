#pragma once

#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "udwrm/error.hpp"

namespace udwrm {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double value) noexcept {
        const double t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value))
            compensation_ += (sum_ - t) + value;
        else
            compensation_ += (value - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int order) {
        if (order < 1) throw Error(ErrorKind::domain, "Gauss-Legendre order must be >= 1");
        nodes.resize(static_cast<std::size_t>(order));
        weights.resize(static_cast<std::size_t>(order));
        const int half = (order + 1) / 2;
        for (int i = 0; i < half; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
            double derivative = 1.0;
            for (int iteration = 0; iteration < 100; ++iteration) {
                double p0 = 1.0;
                double p1 = x;
                for (int n = 2; n <= order; ++n) {
                    const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
                    p0 = p1;
                    p1 = p2;
                }
                derivative = order * (x * p1 - p0) / (x * x - 1.0);
                const double step = p1 / derivative;
                x -= step;
                if (std::abs(step) < 1e-16) break;
            }
            // recompute the derivative at the converged node
            double p0 = 1.0;
            double p1 = x;
            for (int n = 2; n <= order; ++n) {
                const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
                p0 = p1;
                p1 = p2;
            }
            derivative = order == 1 ? 1.0 : order * (x * p1 - p0) / (x * x - 1.0);
            const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if (order % 2 == 1) nodes[order / 2] = 0.0;
    }

    int order() const noexcept { return static_cast<int>(nodes.size()); }

    /// Integral of f over [a, b] with one panel.
    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        CompensatedSum sum;
        for (std::size_t i = 0; i < nodes.size(); ++i) sum.add(weights[i] * f(mid + half * nodes[i]));
        return half * sum.value();
    }

    /// Integral of f over consecutive panels [edges[i], edges[i+1]].
    template <class F>
    double integrate_panels(F&& f, std::span<const double> edges) const {
        CompensatedSum sum;
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) sum.add(integrate(f, edges[i], edges[i + 1]));
        return sum.value();
    }
};

/// Uniform panel edges of width at most max_width covering [a, b].
inline std::vector<double> uniform_panels(double a, double b, double max_width) {
    const int count = std::max(1, static_cast<int>(std::ceil((b - a) / max_width)));
    std::vector<double> edges(static_cast<std::size_t>(count) + 1);
    for (int i = 0; i <= count; ++i) edges[i] = a + (b - a) * i / count;
    return edges;
}

struct ExtrapolatedValue {
    double value = 0.0;
    double error = 0.0;
    std::vector<double> raw;
};

/// Polynomial extrapolation to h -> 0 of values computed at h0, h0/2, h0/4, ...,
/// assuming an error expansion in integer powers of h.
inline ExtrapolatedValue richardson_limit(std::span<const double> values) {
    if (values.size() < 2) throw Error(ErrorKind::input, "extrapolation needs at least two values");
    std::vector<std::vector<double>> table;
    for (std::size_t j = 0; j < values.size(); ++j) {
        std::vector<double> row{values[j]};
        for (std::size_t m = 1; m <= j; ++m) {
            const double factor = std::ldexp(1.0, static_cast<int>(m)) - 1.0;
            row.push_back(row[m - 1] + (row[m - 1] - table[j - 1][m - 1]) / factor);
        }
        table.push_back(std::move(row));
    }
    const auto& last = table.back();
    return {last.back(), std::abs(last.back() - last[last.size() - 2]),
            std::vector<double>(values.begin(), values.end())};
}

/// Sobol points in [0,1)^dim, optionally shifted modulo 1 by a seed-derived vector.
class SobolPoints {
public:
    SobolPoints(int dimension, std::uint64_t seed) : engine_(static_cast<unsigned>(dimension)), shift_(dimension, 0.0) {
        if (dimension < 1) throw Error(ErrorKind::domain, "Sobol dimension must be >= 1");
        if (seed != 0) {
            std::mt19937_64 rng(seed);
            for (double& s : shift_) s = static_cast<double>(rng() >> 11) * 0x1p-53;
        }
    }

    int dimension() const noexcept { return static_cast<int>(shift_.size()); }

    void skip(std::uint64_t points) { engine_.discard(points * shift_.size()); }

    void next(std::span<double> point) {
        for (std::size_t i = 0; i < shift_.size(); ++i) {
            double x = static_cast<double>(engine_()) * 0x1p-64 + shift_[i];
            point[i] = x >= 1.0 ? x - 1.0 : x;
        }
    }

private:
    boost::random::sobol engine_;
    std::vector<double> shift_;
};

/// Tent map that makes a non-periodic integrand friendlier to QMC.
inline double tent(double x) noexcept { return 1.0 - std::abs(2.0 * x - 1.0); }

/// Runs body(chunk) for chunk = 0..chunks-1 on up to `jobs` threads. Callers
/// store per-chunk results so the reduction order never depends on `jobs`.
template <class Body>
void for_each_chunk(std::size_t chunks, int jobs, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(chunks, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) body(c);
        return;
    }
    std::vector<std::exception_ptr> failures(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    for (std::size_t c = w; c < chunks; c += workers) body(c);
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& failure : failures)
        if (failure) std::rethrow_exception(failure);
}

}  // namespace udwrm
