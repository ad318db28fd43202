#pragma once

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "udwrm/combinatorics.hpp"
#include "udwrm/error.hpp"
#include "udwrm/kernel.hpp"
#include "udwrm/quadrature.hpp"
#include "udwrm/schedule.hpp"
#include "udwrm/special.hpp"

namespace udwrm {

/// Two-level detector: energy gap and field coupling.
struct DetectorParams {
    double gap = 0.2;
    double coupling = 1e-2;
};

inline void validate(const DetectorParams& detector) {
    if (!(detector.gap > 0.0)) throw Error(ErrorKind::domain, "detector gap must be > 0");
    if (!(detector.coupling > 0.0)) throw Error(ErrorKind::domain, "coupling must be > 0");
}

/// Advisory notes about parameter choices that weaken the perturbative treatment.
inline std::vector<std::string> detector_warnings(const DetectorParams& detector) {
    std::vector<std::string> notes;
    if (detector.coupling > 0.1)
        notes.push_back("coupling " + std::to_string(detector.coupling) + " > 0.1; second-order perturbation theory may be unreliable");
    return notes;
}

enum class Method { closed_form, quadrature, bound_midpoint };

inline const char* to_string(Method method) noexcept {
    switch (method) {
    case Method::closed_form: return "closed_form";
    case Method::quadrature: return "quadrature";
    case Method::bound_midpoint: return "bound_midpoint";
    }
    return "unknown";
}

/// A probability with its absolute error. `relative_correction` is
/// value/q - 1 for conditional probabilities, kept separately so tiny
/// corrections are not lost to rounding against q.
struct ProbabilityResult {
    double value = 0.0;
    double abs_error = 0.0;
    Method method = Method::closed_form;
    double relative_correction = 0.0;
};

/// Intervals with outcome 1 before the queried interval, plus the query.
struct HistoryRecord {
    std::vector<std::int64_t> prior;
    std::int64_t query = 0;

    int order() const noexcept { return static_cast<int>(prior.size()) + 1; }

    std::vector<std::int64_t> all() const {
        auto labels = prior;
        labels.push_back(query);
        return labels;
    }
};

inline void validate(const HistoryRecord& history) {
    for (std::size_t i = 0; i < history.prior.size(); ++i) {
        if (history.prior[i] < 0) throw Error(ErrorKind::input, "interval indices must be >= 0");
        if (i > 0 && history.prior[i] <= history.prior[i - 1])
            throw Error(ErrorKind::input, "history intervals must be strictly increasing");
    }
    if (history.query < 0 || (!history.prior.empty() && history.query <= history.prior.back()))
        throw Error(ErrorKind::input, "queried interval must come after the history");
}

// ---------------------------------------------------------------------------
// Single-interval excitation probability

/// Excitation probability of an inertial detector with an untruncated
/// Gaussian switching of width sigma:
/// (lambda^2 / 4pi) [exp(-w^2 s^2) - w s Gamma(1/2, w^2 s^2)].
inline ProbabilityResult q_closed_inertial(const DetectorParams& detector, double sigma) {
    validate(detector);
    if (!(sigma > 0.0)) throw Error(ErrorKind::domain, "sigma must be > 0");
    const double x = detector.gap * sigma;
    const double bracket = std::exp(-x * x) - x * upper_gamma_half(x * x);
    const double value = detector.coupling * detector.coupling / (4.0 * std::numbers::pi) * bracket;
    return {value, 8.0 * std::numeric_limits<double>::epsilon() * value, Method::closed_form, 0.0};
}

struct SeriesOptions {
    std::optional<int> max_terms;  // unset: grow until the tail meets rel_tolerance
    double rel_tolerance = 1e-12;
};

/// Excitation probability of a uniformly accelerated detector with an
/// untruncated Gaussian switching, as a sum over the poles of the kernel at
/// imaginary times 2 pi n / alpha. Each term is combined in log space into
/// exp(-w^2 s^2) g(L_n) with g the ramp moment of the Gaussian, and the
/// neglected tail |n| > N is replaced by its leading asymptotic sum.
inline ProbabilityResult q_closed_accelerated(const DetectorParams& detector, double sigma, double acceleration,
                                              SeriesOptions options = {}) {
    validate(detector);
    if (!(sigma > 0.0)) throw Error(ErrorKind::domain, "sigma must be > 0");
    if (!(acceleration > 0.0)) throw Error(ErrorKind::domain, "acceleration must be > 0");
    const double ws = detector.gap * sigma;
    const double step = std::numbers::pi / (acceleration * sigma);  // L grows by this per pole
    const double prefactor =
        detector.coupling * detector.coupling / (2.0 * std::numbers::pi) * std::exp(-ws * ws);

    struct Partial {
        double value;
        double error;
    };
    auto evaluate = [&](int terms) -> Partial {
        CompensatedSum sum;
        sum.add(gaussian_ramp_moment(ws));  // n = 0 is the inertial response
        for (int m = 1; m <= terms; ++m) {
            sum.add(gaussian_ramp_moment(step * m - ws));
            sum.add(gaussian_ramp_moment(step * m + ws));
        }
        const double shift = ws / step;
        const double tail = (boost::math::trigamma(terms + 1.0 - shift) + boost::math::trigamma(terms + 1.0 + shift)) /
                            (4.0 * step * step);
        const double gap = step * terms - ws;
        const double tail_error = 1.0 / (4.0 * step * gap * gap * gap);
        const double total = sum.value() + tail;
        const double rounding = 1e-13 * std::abs(total);
        return {prefactor * total, prefactor * (tail_error + rounding)};
    };

    const int first_valid = static_cast<int>(std::floor(ws / step)) + 2;
    if (options.max_terms) {
        const int terms = *options.max_terms;
        if (terms < first_valid)
            throw Error(ErrorKind::truncation, "pole sum needs at least " + std::to_string(first_valid) + " terms");
        const Partial p = evaluate(terms);
        if (p.error > options.rel_tolerance * std::abs(p.value))
            throw Error(ErrorKind::truncation, "pole-sum tail " + std::to_string(p.error) + " exceeds tolerance");
        return {p.value, p.error, Method::closed_form, 0.0};
    }
    for (int terms = std::max(4, first_valid); terms <= (1 << 24); terms *= 2) {
        const Partial p = evaluate(terms);
        if (p.error <= options.rel_tolerance * std::abs(p.value)) return {p.value, p.error, Method::closed_form, 0.0};
    }
    throw Error(ErrorKind::truncation, "pole sum did not reach the requested tolerance");
}

/// Closed form for the schedule's Gaussian width along the given worldline.
inline ProbabilityResult q_closed(const Worldline& worldline, const RepetitionSchedule& schedule,
                                  const DetectorParams& detector) {
    const auto sigma = gaussian_sigma(schedule);
    if (!sigma) throw Error(ErrorKind::domain, "closed forms exist only for Gaussian switching");
    if (const auto* acc = std::get_if<Accelerated>(&worldline))
        return q_closed_accelerated(detector, *sigma, acc->acceleration);
    return q_closed_inertial(detector, *sigma);
}

struct DirectOptions {
    int levels = 7;            // regulator values eps, eps/2, ..., eps/2^(levels-1)
    int gl_order = 24;
    double rel_tolerance = 1e-8;
};

/// Overlap integral of one interval's profile with itself shifted by lag s >= 0.
inline double profile_autocorrelation(const RepetitionSchedule& schedule, double lag, const GaussLegendre& rule) {
    const double h = support_half_width(schedule);
    if (lag >= 2.0 * h) return 0.0;
    const auto edges = uniform_panels(-h + lag, h, profile_scale(schedule));
    return rule.integrate_panels(
        [&](double u) { return profile_value(schedule, u) * profile_value(schedule, u - lag); }, edges);
}

/// Excitation probability from the regularised double integral
/// 2 lambda^2 int du int_0 ds chi(u) chi(u - s) Re[exp(-i w s) W_eps(s)],
/// reduced to a single lag integral against the profile autocorrelation and
/// extrapolated to eps -> 0 over a halving sequence of regulators.
inline ProbabilityResult q_direct(const WightmanKernel& kernel, const RepetitionSchedule& schedule,
                                  const DetectorParams& detector, DirectOptions options = {}) {
    validate(detector);
    validate(schedule);
    validate(kernel.worldline);
    if (!(kernel.regulator_epsilon > 0.0)) throw Error(ErrorKind::domain, "regulator epsilon must be > 0");
    if (options.levels < 3) throw Error(ErrorKind::input, "extrapolation needs at least three regulator values");
    const GaussLegendre rule(options.gl_order);
    const double max_lag = 2.0 * support_half_width(schedule);
    const double scale = profile_scale(schedule);

    std::vector<double> values;
    for (int level = 0; level < options.levels; ++level) {
        WightmanKernel regulated = kernel;
        regulated.regulator_epsilon = std::ldexp(kernel.regulator_epsilon, -level);
        // geometric panels resolve the near-singular region s ~ eps
        std::vector<double> edges{0.0};
        for (double edge = regulated.regulator_epsilon; edge < std::min(max_lag, scale); edge *= 2.0)
            edges.push_back(edge);
        for (double edge = edges.back() + 0.5 * scale; edge < max_lag; edge += 0.5 * scale) edges.push_back(edge);
        edges.push_back(max_lag);
        const double integral = rule.integrate_panels(
            [&](double s) {
                const auto phase = std::polar(1.0, -detector.gap * s);
                return profile_autocorrelation(schedule, s, rule) * std::real(phase * eval_kernel(regulated, s));
            },
            edges);
        values.push_back(2.0 * detector.coupling * detector.coupling * integral);
    }
    const auto limit = richardson_limit(values);
    if (!(limit.error <= options.rel_tolerance * std::abs(limit.value))) {
        std::ostringstream diag;
        diag.precision(17);
        diag << "regulator extrapolation did not converge: estimate " << limit.value << " +- " << limit.error
             << ", sequence";
        for (double v : limit.raw) diag << ' ' << v;
        throw Error(ErrorKind::numerical, diag.str());
    }
    return {limit.value, limit.error, Method::quadrature, 0.0};
}

enum class QSource { closed_form, direct };

// ---------------------------------------------------------------------------
// Cross-interval correlation integrals

struct QuadratureOptions {
    int gl_order = 32;          // tensor rule for two intervals
    int qmc_log2_points = 20;   // Sobol points for three or more intervals
    std::uint64_t seed = 0;
    int jobs = 1;
};

/// Everything needed to evaluate conditional probabilities for one detector.
struct ResponseContext {
    WightmanKernel kernel;
    RepetitionSchedule schedule;
    DetectorParams detector;
    QuadratureOptions quadrature;
    QSource q_source = QSource::closed_form;
    DirectOptions direct;
};

struct IntegralEstimate {
    double value = 0.0;
    double abs_error = 0.0;
};

namespace detail {

// Maps a point of the unit square to the later time u, the earlier time
// u - s and the weight 2 chi(u) chi(u-s) cos(w s) |Jacobian| of one interval.
struct IntervalMap {
    const RepetitionSchedule* schedule;
    double centre;
    double half_width;
    double gap;

    void operator()(double x, double y, double& later, double& earlier, double& weight) const {
        const double span = 2.0 * half_width;
        const double offset = span * x;         // u - (centre - h)
        const double lag = offset * y;          // s
        const double u = centre - half_width + offset;
        later = u;
        earlier = u - lag;
        weight = 2.0 * profile_value(*schedule, u - centre) * profile_value(*schedule, u - lag - centre) *
                 std::cos(gap * lag) * span * offset;
    }
};

// Maps a point of the unit square to two independent draws from a normal
// proposal truncated to the interval's support, ordered into later and
// earlier time. Covering both orders of the pair absorbs the factor 2, and
// dividing by the proposal density leaves a nearly flat weight
// chi(u) chi(u') cos(w (u - u')) / (p(u) p(u')) for QMC.
struct ProposalMap {
    const RepetitionSchedule* schedule;
    double centre;
    double half_width;
    double gap;
    double scale;
    double cdf_low;
    double cdf_width;

    ProposalMap(const RepetitionSchedule& s, double centre_, double gap_)
        : schedule(&s), centre(centre_), half_width(support_half_width(s)), gap(gap_), scale(profile_scale(s)) {
        cdf_low = 0.5 * std::erfc(half_width / (scale * std::numbers::sqrt2));
        cdf_width = 1.0 - 2.0 * cdf_low;
    }

    double draw(double x, double& density) const {
        const double p = cdf_low + x * cdf_width;
        const double z = std::numbers::sqrt2 * boost::math::erf_inv(2.0 * p - 1.0);
        density = std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * scale * cdf_width);
        return z * scale;
    }

    void operator()(double x, double y, double& later, double& earlier, double& weight) const {
        double pa = 0.0, pb = 0.0;
        const double a = draw(x, pa);
        const double b = draw(y, pb);
        later = centre + std::max(a, b);
        earlier = centre + std::min(a, b);
        weight = profile_value(*schedule, a) * profile_value(*schedule, b) * std::cos(gap * (a - b)) / (pa * pb);
    }
};

inline std::vector<IntervalMap> interval_maps(std::span<const int> labels, const ResponseContext& ctx) {
    std::vector<IntervalMap> maps;
    const double h = support_half_width(ctx.schedule);
    for (int label : labels) {
        if (label < 0 || label >= ctx.schedule.count)
            throw Error(ErrorKind::input, "interval " + std::to_string(label) + " outside the schedule");
        maps.push_back({&ctx.schedule, ctx.schedule.interval_centre(label), h, ctx.detector.gap});
    }
    return maps;
}

inline void check_common_labels(std::span<const ContractionClass> classes) {
    if (classes.empty()) throw Error(ErrorKind::input, "no contraction classes given");
    for (const auto& cls : classes) {
        if (cls.labels != classes.front().labels)
            throw Error(ErrorKind::input, "contraction classes must share their interval labels");
    }
    if (classes.front().order() < 2) throw Error(ErrorKind::input, "correlation integrals need at least two intervals");
}

// Products over each class's edges of the kernel between paired points.
class ClassProducts {
public:
    ClassProducts(std::span<const ContractionClass> classes, const Worldline& worldline)
        : classes_(classes), worldline_(worldline), points_(2 * classes.front().order()),
          kernel_(static_cast<std::size_t>(points_ * points_), 0.0) {}

    void evaluate(std::span<const double> times, std::span<double> products) {
        for (int a = 0; a < points_; ++a) {
            for (int b = a + 1; b < points_; ++b) {
                if (point_position(a) == point_position(b)) continue;
                kernel_[a * points_ + b] = separated_kernel(worldline_, std::abs(times[a] - times[b]));
            }
        }
        for (std::size_t c = 0; c < classes_.size(); ++c) {
            double product = 1.0;
            for (auto [a, b] : classes_[c].edges) product *= kernel_[a * points_ + b];
            products[c] = product;
        }
    }

private:
    std::span<const ContractionClass> classes_;
    Worldline worldline_;
    int points_;
    std::vector<double> kernel_;
};

inline void check_signs(std::span<const ContractionClass> classes, std::span<const IntegralEstimate> estimates) {
    const double sign = classes.front().order() % 2 == 0 ? 1.0 : -1.0;
    for (const auto& e : estimates) {
        if (sign * e.value < -3.0 * e.abs_error)
            throw Error(ErrorKind::hypothesis_violation,
                        "correlation integral has the wrong sign; the kernel or gap breaks the sign assumptions");
    }
}

}  // namespace detail

/// Tensor Gauss-Legendre evaluation of every class over the same intervals,
/// with `order` nodes per coordinate.
inline std::vector<double> tensor_correlation_integrals(std::span<const ContractionClass> classes,
                                                        const ResponseContext& ctx, int order) {
    detail::check_common_labels(classes);
    const auto maps = detail::interval_maps(classes.front().labels, ctx);
    const int k = classes.front().order();
    const GaussLegendre rule(order);
    // nodes of one interval: later time, earlier time, weight
    struct Node {
        double later, earlier, weight;
    };
    std::vector<std::vector<Node>> nodes(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        for (int a = 0; a < order; ++a) {
            for (int b = 0; b < order; ++b) {
                const double x = 0.5 * (1.0 + rule.nodes[a]);
                const double y = 0.5 * (1.0 + rule.nodes[b]);
                Node node{};
                maps[j](x, y, node.later, node.earlier, node.weight);
                node.weight *= 0.25 * rule.weights[a] * rule.weights[b];
                nodes[j].push_back(node);
            }
        }
    }
    const std::size_t per_interval = nodes.front().size();
    std::vector<std::vector<double>> partial(per_interval, std::vector<double>(classes.size(), 0.0));
    for_each_chunk(per_interval, ctx.quadrature.jobs, [&](std::size_t first) {
        detail::ClassProducts products(classes, ctx.kernel.worldline);
        std::vector<double> times(static_cast<std::size_t>(2 * k));
        std::vector<double> values(classes.size());
        std::vector<CompensatedSum> sums(classes.size());
        std::vector<std::size_t> index(static_cast<std::size_t>(k), 0);
        index[0] = first;
        while (true) {
            double weight = 1.0;
            for (int j = 0; j < k; ++j) {
                const Node& node = nodes[j][index[j]];
                times[2 * j] = node.later;
                times[2 * j + 1] = node.earlier;
                weight *= node.weight;
            }
            if (weight != 0.0) {
                products.evaluate(times, values);
                for (std::size_t c = 0; c < classes.size(); ++c) sums[c].add(weight * values[c]);
            }
            int j = k - 1;
            while (j >= 1 && ++index[j] == per_interval) index[j--] = 0;
            if (j < 1) break;
        }
        for (std::size_t c = 0; c < classes.size(); ++c) partial[first][c] = sums[c].value();
    });
    std::vector<double> result(classes.size(), 0.0);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        CompensatedSum sum;
        for (const auto& row : partial) sum.add(row[c]);
        result[c] = sum.value();
    }
    return result;
}

inline constexpr int kQmcReplicas = 8;

/// Randomised Sobol estimate of every class over the same intervals with
/// 2^log2_points points split over kQmcReplicas independent random shifts;
/// the error is the standard error of the replica means.
inline std::vector<IntegralEstimate> qmc_correlation_integrals(std::span<const ContractionClass> classes,
                                                               const ResponseContext& ctx, int log2_points) {
    detail::check_common_labels(classes);
    if (log2_points < 8 || log2_points > 30) throw Error(ErrorKind::input, "QMC size must be 2^8 .. 2^30 points");
    std::vector<detail::ProposalMap> maps;
    for (int label : classes.front().labels) {
        if (label < 0 || label >= ctx.schedule.count)
            throw Error(ErrorKind::input, "interval " + std::to_string(label) + " outside the schedule");
        maps.emplace_back(ctx.schedule, ctx.schedule.interval_centre(label), ctx.detector.gap);
    }
    const int k = classes.front().order();
    const std::size_t total_points = std::size_t{1} << log2_points;
    const std::size_t replica_points = total_points / kQmcReplicas;
    const std::size_t chunk_points = std::min<std::size_t>(std::size_t{1} << 12, replica_points);
    const std::size_t chunks_per_replica = replica_points / chunk_points;
    const std::size_t chunks = chunks_per_replica * kQmcReplicas;
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(classes.size(), 0.0));
    for_each_chunk(chunks, ctx.quadrature.jobs, [&](std::size_t chunk) {
        const std::size_t replica = chunk / chunks_per_replica;
        // distinct non-zero shift per replica, reproducible from the seed
        SobolPoints sobol(2 * k, ctx.quadrature.seed * kQmcReplicas + replica + 1);
        sobol.skip((chunk % chunks_per_replica) * chunk_points);
        detail::ClassProducts products(classes, ctx.kernel.worldline);
        std::vector<double> point(static_cast<std::size_t>(2 * k));
        std::vector<double> times(static_cast<std::size_t>(2 * k));
        std::vector<double> values(classes.size());
        std::vector<CompensatedSum> sums(classes.size());
        for (std::size_t i = 0; i < chunk_points; ++i) {
            sobol.next(point);
            double weight = 1.0;
            for (int j = 0; j < k; ++j) {
                double w = 0.0;
                maps[j](tent(point[2 * j]), tent(point[2 * j + 1]), times[2 * j], times[2 * j + 1], w);
                weight *= w;
            }
            if (weight == 0.0) continue;
            products.evaluate(times, values);
            for (std::size_t c = 0; c < classes.size(); ++c) sums[c].add(weight * values[c]);
        }
        for (std::size_t c = 0; c < classes.size(); ++c) partial[chunk][c] = sums[c].value();
    });
    std::vector<IntegralEstimate> result(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::array<double, kQmcReplicas> means{};
        CompensatedSum total;
        for (int r = 0; r < kQmcReplicas; ++r) {
            CompensatedSum sum;
            for (std::size_t j = 0; j < chunks_per_replica; ++j) sum.add(partial[r * chunks_per_replica + j][c]);
            means[r] = sum.value() / static_cast<double>(replica_points);
            total.add(means[r]);
        }
        const double mean = total.value() / kQmcReplicas;
        double spread = 0.0;
        for (double m : means) spread += (m - mean) * (m - mean);
        result[c] = {mean, std::sqrt(spread / (kQmcReplicas - 1) / kQmcReplicas)};
    }
    return result;
}

/// Irreducible correlation integrals of classes sharing one interval set:
/// tensor Gauss-Legendre (error from halving the order) for two intervals,
/// Sobol QMC for more.
inline std::vector<IntegralEstimate> irreducible_integrals(std::span<const ContractionClass> classes,
                                                           const ResponseContext& ctx) {
    detail::check_common_labels(classes);
    validate(ctx.schedule);
    validate(ctx.detector);
    std::vector<IntegralEstimate> result(classes.size());
    if (classes.front().order() == 2) {
        const int order = ctx.quadrature.gl_order;
        const auto fine = tensor_correlation_integrals(classes, ctx, order);
        const auto coarse = tensor_correlation_integrals(classes, ctx, std::max(2, order / 2));
        for (std::size_t c = 0; c < classes.size(); ++c) result[c] = {fine[c], std::abs(fine[c] - coarse[c])};
    } else {
        result = qmc_correlation_integrals(classes, ctx, ctx.quadrature.qmc_log2_points);
    }
    detail::check_signs(classes, result);
    return result;
}

inline IntegralEstimate irreducible_integral(const ContractionClass& cls, const ResponseContext& ctx) {
    return irreducible_integrals(std::span<const ContractionClass>(&cls, 1), ctx).front();
}

/// Sum of all irreducible integrals over an interval set, divided by Q^k.
struct FractionResult {
    double value = 0.0;
    double abs_error = 0.0;
    std::vector<IntegralEstimate> classes;
};

inline FractionResult f_fraction(std::span<const int> labels, const ResponseContext& ctx, double calq) {
    if (!(calq > 0.0)) throw Error(ErrorKind::domain, "Q must be > 0");
    const int k = static_cast<int>(labels.size());
    const auto classes = enumerate_contraction_classes(k, labels);
    FractionResult result;
    result.classes = irreducible_integrals(classes, ctx);
    CompensatedSum value;
    double error = 0.0;
    for (const auto& c : result.classes) {
        value.add(c.value);
        error += c.abs_error;
    }
    const double scale = std::pow(calq, k);
    result.value = value.value() / scale;
    result.abs_error = error / scale;
    return result;
}

// ---------------------------------------------------------------------------
// Conditional excitation

inline constexpr int kMaxConditionalOrder = 4;

/// Caches per-interval-set fractions of one detector setup. Fractions depend
/// only on the gaps between intervals, which is the cache key.
class ResponseModel {
public:
    explicit ResponseModel(ResponseContext ctx) : ctx_(std::move(ctx)) {
        validate(ctx_.detector);
        validate(ctx_.schedule);
        validate(ctx_.kernel.worldline);
        q_ = ctx_.q_source == QSource::closed_form
                 ? q_closed(ctx_.kernel.worldline, ctx_.schedule, ctx_.detector)
                 : q_direct(ctx_.kernel, ctx_.schedule, ctx_.detector, ctx_.direct);
    }

    const ResponseContext& context() const noexcept { return ctx_; }
    const ProbabilityResult& excitation() const noexcept { return q_; }
    double q() const noexcept { return q_.value; }
    double calq() const noexcept { return q_.value / (ctx_.detector.coupling * ctx_.detector.coupling); }

    const FractionResult& fraction(std::span<const std::int64_t> labels) {
        std::vector<int> gaps;
        for (auto label : labels) gaps.push_back(static_cast<int>(label - labels.front()));
        if (auto it = cache_.find(gaps); it != cache_.end()) return it->second;
        const int shift = static_cast<int>(labels.front());
        std::vector<int> shifted;
        for (int g : gaps) shifted.push_back(g + shift);
        return cache_.emplace(gaps, f_fraction(shifted, ctx_, calq())).first->second;
    }

    /// Probability of outcome 1 in the queried interval given outcome 1 in
    /// each prior interval and 0 elsewhere, as q (1 + c) with
    /// c = (sum of F over subsets containing the query) / (1 + sum of F over
    /// subsets of the prior intervals).
    ProbabilityResult conditional_excitation(const HistoryRecord& history) {
        validate(history);
        if (history.order() > kMaxConditionalOrder)
            throw Error(ErrorKind::range, "conditional excitation is evaluated for at most " +
                                              std::to_string(kMaxConditionalOrder) + " excitations");
        if (history.query >= ctx_.schedule.count)
            throw Error(ErrorKind::input, "queried interval outside the schedule");
        if (history.prior.empty()) return q_;

        const auto labels = history.all();
        const int n = static_cast<int>(labels.size());
        CompensatedSum with_query;
        CompensatedSum without_query;
        double error_with = 0.0;
        double error_without = 0.0;
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            if (__builtin_popcount(mask) < 2) continue;
            std::vector<std::int64_t> subset;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i)) subset.push_back(labels[i]);
            const auto& f = fraction(subset);
            if (mask & (1u << (n - 1))) {
                with_query.add(f.value);
                error_with += f.abs_error;
            } else {
                without_query.add(f.value);
                error_without += f.abs_error;
            }
        }
        const double denominator = 1.0 + without_query.value();
        if (!(denominator > 0.0))
            throw Error(ErrorKind::bound_violation, "conditional probability denominator is not positive");
        const double correction = with_query.value() / denominator;
        const double correction_error = (error_with + std::abs(correction) * error_without) / denominator;
        ProbabilityResult result;
        result.relative_correction = correction;
        result.value = q_.value * (1.0 + correction);
        result.abs_error = q_.value * correction_error + q_.abs_error * (1.0 + std::abs(correction));
        result.method = Method::quadrature;
        return result;
    }

private:
    ResponseContext ctx_;
    ProbabilityResult q_;
    std::map<std::vector<int>, FractionResult> cache_;
};

}  // namespace udwrm
