#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "udwrm/error.hpp"
#include "udwrm/strings.hpp"

namespace udwrm::oracle {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr int kMaxEnvironmentDim = 64;
inline constexpr int kMaxExactStringLength = 20;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kUnitaryTolerance = 1e-10;

/// Expansion U_k = U (x) 1 + eps sum_l A_l (x) B_l(k) + eps^2 sum_l C_l (x) D_l(k) + O(eps^3).
struct WeakStructure {
    Matrix detector_unitary;             // U, 2 x 2
    std::vector<Matrix> first_detector;  // A_l
    std::vector<std::vector<Matrix>> first_environment;   // B_l(k), indexed [k][l]
    std::vector<Matrix> second_detector;                  // C_l
    std::vector<std::vector<Matrix>> second_environment;  // D_l(k), indexed [k][l]
    double coupling_epsilon = 0.0;
};

/// Detector qubit coupled to a d-level environment. Product states are
/// ordered detector-major: index = b * d + e. Step k evolves with
/// exp(-i w_k (h (x) 1 + lambda H_k)), one exponential per step.
struct FiniteRmModel {
    double gap = 0.2;
    int environment_dim = 2;
    Matrix detector_hamiltonian;         // 2 x 2 hermitian
    std::vector<Matrix> interactions;    // H_k, 2d x 2d hermitian
    double coupling = 1e-2;
    std::vector<double> window_weights;  // w_k
    Vector initial_environment;          // unit vector
    std::optional<WeakStructure> weak;

    int steps() const noexcept { return static_cast<int>(interactions.size()); }
};

namespace detail {

inline double hermitian_defect(const Matrix& m) { return (m - m.adjoint()).norm(); }

inline Matrix identity(int n) { return Matrix::Identity(n, n); }

inline Matrix step_generator(const FiniteRmModel& m, int k) {
    return Complex(0.0, -m.window_weights[k]) *
           (Eigen::kroneckerProduct(m.detector_hamiltonian, identity(m.environment_dim)).eval() +
            m.coupling * m.interactions[k]);
}

// exp of the upper bidiagonal matrix with the given diagonal: its first row
// holds the divided differences exp[x_0], exp[x_0, x_1], exp[x_0, x_1, x_2].
inline Matrix divided_differences(const std::vector<Complex>& nodes) {
    const int n = static_cast<int>(nodes.size());
    Matrix bidiagonal = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        bidiagonal(i, i) = nodes[i];
        if (i + 1 < n) bidiagonal(i, i + 1) = 1.0;
    }
    return bidiagonal.exp();
}

}  // namespace detail

/// Model error if any structural invariant fails.
inline void validate(const FiniteRmModel& m) {
    if (!(m.gap > 0.0)) throw Error(ErrorKind::model, "gap must be > 0");
    if (m.environment_dim < 1 || m.environment_dim > kMaxEnvironmentDim)
        throw Error(ErrorKind::model, "environment dimension must lie in 1.." + std::to_string(kMaxEnvironmentDim));
    const int n = 2 * m.environment_dim;
    if (m.detector_hamiltonian.rows() != 2 || m.detector_hamiltonian.cols() != 2)
        throw Error(ErrorKind::model, "detector hamiltonian must be 2 x 2");
    if (detail::hermitian_defect(m.detector_hamiltonian) > kHermitianTolerance)
        throw Error(ErrorKind::model, "detector hamiltonian is not hermitian");
    if (m.window_weights.size() != m.interactions.size())
        throw Error(ErrorKind::model, "one window weight per step is required");
    for (std::size_t k = 0; k < m.interactions.size(); ++k) {
        const auto& h = m.interactions[k];
        if (h.rows() != n || h.cols() != n)
            throw Error(ErrorKind::model, "interaction " + std::to_string(k) + " has the wrong dimension");
        if (detail::hermitian_defect(h) > kHermitianTolerance * std::max(1.0, h.norm()))
            throw Error(ErrorKind::model, "interaction " + std::to_string(k) + " is not hermitian");
        if (!(m.window_weights[k] >= 0.0)) throw Error(ErrorKind::model, "window weights must be >= 0");
    }
    if (m.initial_environment.size() != m.environment_dim)
        throw Error(ErrorKind::model, "initial environment has the wrong dimension");
    if (std::abs(m.initial_environment.norm() - 1.0) > 1e-12)
        throw Error(ErrorKind::model, "initial environment must be a unit vector");
}

/// Full step propagator U_k.
inline Matrix step_unitary(const FiniteRmModel& m, int k) {
    if (k < 0 || k >= m.steps()) throw Error(ErrorKind::input, "step index out of range");
    Matrix u = detail::step_generator(m, k).exp();
    const double defect = (u.adjoint() * u - detail::identity(static_cast<int>(u.rows()))).norm();
    if (defect > kUnitaryTolerance) throw Error(ErrorKind::model, "step propagator is not unitary");
    return u;
}

struct TrajectoryState {
    Vector environment;
    BitString bits;
    double probability = 1.0;
};

inline TrajectoryState initial_state(const FiniteRmModel& m) { return {m.initial_environment, {}, 1.0}; }

struct StepDistribution {
    std::array<double, 2> probability{};
    std::array<Vector, 2> post_state;  // normalised; empty when the outcome is impossible
};

/// Outcome probabilities after step k from |0> (x) f and the reset
/// environment states for each outcome.
inline StepDistribution step_distribution(const Matrix& unitary, const Vector& environment) {
    const auto d = environment.size();
    StepDistribution out;
    for (int b = 0; b < 2; ++b) {
        Vector branch = unitary.block(b * d, 0, d, d) * environment;
        const double p = branch.squaredNorm();
        out.probability[b] = p;
        if (p > 0.0) out.post_state[b] = branch / std::sqrt(p);
    }
    if (std::abs(out.probability[0] + out.probability[1] - 1.0) > 1e-12)
        throw Error(ErrorKind::model, "step outcome probabilities do not sum to one");
    return out;
}

inline StepDistribution step_distribution(const FiniteRmModel& m, const TrajectoryState& state, int k) {
    return step_distribution(step_unitary(m, k), state.environment);
}

/// Records outcome b after step k.
inline TrajectoryState advance(const TrajectoryState& state, const StepDistribution& dist, int b) {
    if (dist.probability[b] <= 0.0) throw Error(ErrorKind::input, "outcome has zero probability");
    std::vector<std::uint8_t> bits = state.bits.bits();
    bits.push_back(static_cast<std::uint8_t>(b));
    return {dist.post_state[b], BitString(std::move(bits)), state.probability * dist.probability[b]};
}

inline std::vector<Matrix> step_unitaries(const FiniteRmModel& m, int count) {
    if (count > m.steps()) throw Error(ErrorKind::input, "string is longer than the model's step list");
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) out.push_back(step_unitary(m, k));
    return out;
}

/// Chain-rule probability of an outcome string.
inline double exact_string_prob(const FiniteRmModel& m, const BitString& bits) {
    validate(m);
    if (bits.length() > kMaxExactStringLength)
        throw Error(ErrorKind::range, "exact string probabilities are limited to L = 20");
    const auto unitaries = step_unitaries(m, bits.length());
    Vector environment = m.initial_environment;
    double probability = 1.0;
    for (int k = 0; k < bits.length(); ++k) {
        const auto dist = step_distribution(unitaries[k], environment);
        probability *= dist.probability[bits[k]];
        if (probability == 0.0) return 0.0;
        environment = dist.post_state[bits[k]];
    }
    return probability;
}

/// Probabilities of all 2^L strings, indexed by BitString::id.
inline std::vector<double> string_distribution(const FiniteRmModel& m, int length) {
    validate(m);
    if (length < 0 || length > kMaxExactStringLength)
        throw Error(ErrorKind::range, "exact string probabilities are limited to L = 20");
    const auto unitaries = step_unitaries(m, length);
    std::vector<double> out(std::size_t{1} << length, 0.0);
    auto descend = [&](auto&& self, int k, const Vector& environment, double probability, std::uint64_t id) -> void {
        if (k == length) {
            out[id] = probability;
            return;
        }
        const auto dist = step_distribution(unitaries[k], environment);
        for (int b = 0; b < 2; ++b) {
            const std::uint64_t child = (id << 1) | static_cast<std::uint64_t>(b);
            if (dist.probability[b] > 0.0)
                self(self, k + 1, dist.post_state[b], probability * dist.probability[b], child);
            // impossible branches leave their leaves at zero
        }
    };
    descend(descend, 0, m.initial_environment, 1.0, 0);
    return out;
}

// ---------------------------------------------------------------------------
// Weak-coupling structure

/// Expansion of exp(-i w (h (x) 1 + eps H_k)) in eps, written in the
/// eigenbasis |v_a> of h: A_ab = exp[x_a, x_b] |v_a><v_b| with
/// B_ab(k) = <v_a| -i w H_k |v_b>, and C_abc = exp[x_a, x_b, x_c] |v_a><v_c|
/// with D_abc(k) = B_ab(k) B_bc(k), where x_a = -i w h_a.
inline WeakStructure derive_weak_structure(const FiniteRmModel& m) {
    validate(m);
    if (m.steps() == 0) throw Error(ErrorKind::model, "model has no steps");
    const double w = m.window_weights.front();
    for (double wk : m.window_weights)
        if (wk != w) throw Error(ErrorKind::model, "weak structure needs equal window weights");
    const int d = m.environment_dim;
    Eigen::SelfAdjointEigenSolver<Matrix> eigen(m.detector_hamiltonian);
    const Matrix basis = eigen.eigenvectors();
    std::array<Complex, 2> nodes{Complex(0.0, -w * eigen.eigenvalues()(0)),
                                 Complex(0.0, -w * eigen.eigenvalues()(1))};

    WeakStructure ws;
    ws.coupling_epsilon = m.coupling;
    ws.detector_unitary = (Complex(0.0, -w) * m.detector_hamiltonian).exp();
    auto outer = [&](int a, int b) -> Matrix { return basis.col(a) * basis.col(b).adjoint(); };
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            ws.first_detector.push_back(detail::divided_differences({nodes[a], nodes[b]})(0, 1) * outer(a, b));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                ws.second_detector.push_back(detail::divided_differences({nodes[a], nodes[b], nodes[c]})(0, 2) *
                                             outer(a, c));

    const Matrix rotation = Eigen::kroneckerProduct(basis, detail::identity(d)).eval();
    for (int k = 0; k < m.steps(); ++k) {
        const Matrix rotated = rotation.adjoint() * (Complex(0.0, -w) * m.interactions[k]) * rotation;
        auto block = [&](int a, int b) -> Matrix { return rotated.block(a * d, b * d, d, d); };
        std::vector<Matrix> first;
        std::vector<Matrix> second;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) first.push_back(block(a, b));
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c) second.push_back(block(a, b) * block(b, c));
        ws.first_environment.push_back(std::move(first));
        ws.second_environment.push_back(std::move(second));
    }
    return ws;
}

struct ConsistencyReport {
    double first_order_defect = 0.0;   // || sum U^dag A (x) B + h.c. ||
    double second_order_defect = 0.0;  // || sum U^dag C (x) D + h.c. + sum A^dag A' (x) B^dag B' ||
};

/// Unitarity of the expansion order by order at step k; model error when a
/// defect exceeds tolerance times the size of the terms it cancels.
inline ConsistencyReport check_weak_structure(const WeakStructure& ws, int k, double tolerance = 1e-10) {
    if (k < 0 || k >= static_cast<int>(ws.first_environment.size()))
        throw Error(ErrorKind::input, "step index out of range");
    const auto& as = ws.first_detector;
    const auto& bs = ws.first_environment[k];
    const auto& cs = ws.second_detector;
    const auto& ds = ws.second_environment[k];
    if (as.size() != bs.size() || cs.size() != ds.size())
        throw Error(ErrorKind::model, "weak structure has mismatched operator lists");
    const Matrix& u = ws.detector_unitary;
    const auto d = bs.empty() ? 1 : bs.front().rows();
    const auto n = 2 * d;
    Matrix first = Matrix::Zero(n, n);
    double first_scale = 0.0;
    for (std::size_t l = 0; l < as.size(); ++l) {
        const Matrix term = Eigen::kroneckerProduct((u.adjoint() * as[l]).eval(), bs[l]).eval();
        first += term + term.adjoint();
        first_scale += 2.0 * term.norm();
    }
    Matrix second = Matrix::Zero(n, n);
    double second_scale = 0.0;
    for (std::size_t l = 0; l < cs.size(); ++l) {
        const Matrix term = Eigen::kroneckerProduct((u.adjoint() * cs[l]).eval(), ds[l]).eval();
        second += term + term.adjoint();
        second_scale += 2.0 * term.norm();
    }
    for (std::size_t l = 0; l < as.size(); ++l)
        for (std::size_t r = 0; r < as.size(); ++r) {
            const Matrix term =
                Eigen::kroneckerProduct((as[l].adjoint() * as[r]).eval(), (bs[l].adjoint() * bs[r]).eval()).eval();
            second += term;
            second_scale += term.norm();
        }
    ConsistencyReport report{first.norm(), second.norm()};
    if (report.first_order_defect > tolerance * std::max(1.0, first_scale))
        throw Error(ErrorKind::model, "weak structure breaks unitarity at first order");
    if (report.second_order_defect > tolerance * std::max(1.0, second_scale))
        throw Error(ErrorKind::model, "weak structure breaks unitarity at second order");
    return report;
}

struct PerturbativeTerms {
    std::array<double, 2> born{};    // p_m
    std::array<double, 2> first{};   // Q1_m
    std::array<double, 2> second{};  // Q2_m
};

/// Born part and first two corrections of p_m(k)[f] for m = 0, 1.
inline PerturbativeTerms perturbative_corrections(const WeakStructure& ws, int k, const Vector& f) {
    check_weak_structure(ws, k);
    const Matrix& u = ws.detector_unitary;
    const auto& as = ws.first_detector;
    const auto& bs = ws.first_environment[k];
    const auto& cs = ws.second_detector;
    const auto& ds = ws.second_environment[k];
    auto detector_expect = [](const Matrix& op) { return op(0, 0); };  // <0| op |0>
    auto env_expect = [&](const Matrix& op) { return f.dot(op * f); };
    PerturbativeTerms out;
    for (int m = 0; m < 2; ++m) {
        Matrix projector = Matrix::Zero(2, 2);
        projector(m, m) = 1.0;
        out.born[m] = std::norm(u(m, 0));
        Complex first = 0.0;
        for (std::size_t l = 0; l < as.size(); ++l)
            first += detector_expect(as[l].adjoint() * projector * u) * env_expect(bs[l].adjoint());
        out.first[m] = 2.0 * first.real();
        Complex cross = 0.0;
        for (std::size_t l = 0; l < as.size(); ++l)
            for (std::size_t r = 0; r < as.size(); ++r)
                cross += detector_expect(as[l].adjoint() * projector * as[r]) * env_expect(bs[l].adjoint() * bs[r]);
        Complex second = 0.0;
        for (std::size_t l = 0; l < cs.size(); ++l)
            second += detector_expect(cs[l].adjoint() * projector * u) * env_expect(ds[l].adjoint());
        out.second[m] = cross.real() + 2.0 * second.real();
    }
    return out;
}

inline PerturbativeTerms perturbative_corrections(const FiniteRmModel& m, int k, const Vector& f) {
    if (!m.weak) throw Error(ErrorKind::model, "model has no weak-coupling structure");
    return perturbative_corrections(*m.weak, k, f);
}

/// Per-step terms along the unperturbed trajectory. At zero coupling the
/// environment is untouched by every step, so each step sees the initial state.
inline std::vector<PerturbativeTerms> trajectory_corrections(const FiniteRmModel& m, int count) {
    if (count > m.steps()) throw Error(ErrorKind::input, "string is longer than the model's step list");
    std::vector<PerturbativeTerms> out;
    for (int k = 0; k < count; ++k) out.push_back(perturbative_corrections(m, k, m.initial_environment));
    return out;
}

// ---------------------------------------------------------------------------
// Instance builders

/// Standard normal deviates from a 64-bit Mersenne twister via Box-Muller,
/// so instances do not depend on the standard library's distributions.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (spare_) {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
        return radius * std::cos(2.0 * std::numbers::pi * u2);
    }

    Complex complex_normal() {
        const double re = next();
        return {re, next()};
    }

private:
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

/// Random hermitian matrix with unit-variance entries scaled by 1/sqrt(2n).
inline Matrix random_hermitian(int n, NormalSource& source) {
    Matrix a(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a(i, j) = source.complex_normal();
    return (a + a.adjoint()) / (2.0 * std::sqrt(2.0 * n));
}

inline Vector random_unit_vector(int n, NormalSource& source) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = source.complex_normal();
    return v / v.norm();
}

struct InstanceOptions {
    int environment_dim = 2;
    int steps = 4;
    double gap = 0.2;
    double drive = 0.3;  // sigma_x amplitude; makes the detector-only Born part non-trivial
    double coupling = 1e-2;
    double window = 1.0;
};

/// Detector hamiltonian gap |1><1| + drive sigma_x.
inline Matrix driven_detector(double gap, double drive) {
    Matrix h = Matrix::Zero(2, 2);
    h(1, 1) = gap;
    h(0, 1) = drive;
    h(1, 0) = drive;
    return h;
}

/// Generic coupled qubit-environment instance with a fresh random
/// interaction at every step and its derived weak structure.
inline FiniteRmModel random_model(const InstanceOptions& opts, std::uint64_t seed) {
    NormalSource source(seed);
    FiniteRmModel m;
    m.gap = opts.gap;
    m.environment_dim = opts.environment_dim;
    m.detector_hamiltonian = driven_detector(opts.gap, opts.drive);
    m.coupling = opts.coupling;
    for (int k = 0; k < opts.steps; ++k) m.interactions.push_back(random_hermitian(2 * opts.environment_dim, source));
    m.window_weights.assign(static_cast<std::size_t>(opts.steps), opts.window);
    m.initial_environment = random_unit_vector(opts.environment_dim, source);
    validate(m);
    m.weak = derive_weak_structure(m);
    return m;
}

/// Instance whose step propagators factor into detector and environment
/// parts, so outcomes are i.i.d. whatever the environment does.
inline FiniteRmModel iid_model(const InstanceOptions& opts, std::uint64_t seed) {
    NormalSource source(seed);
    FiniteRmModel m;
    m.gap = opts.gap;
    m.environment_dim = opts.environment_dim;
    m.detector_hamiltonian = driven_detector(opts.gap, opts.drive);
    m.coupling = opts.coupling;
    const Matrix detector_part = random_hermitian(2, source);
    const int d = opts.environment_dim;
    for (int k = 0; k < opts.steps; ++k) {
        const Matrix environment_part = random_hermitian(d, source);
        m.interactions.push_back(Eigen::kroneckerProduct(detector_part, detail::identity(d)).eval() +
                                 Eigen::kroneckerProduct(detail::identity(2), environment_part).eval());
    }
    m.window_weights.assign(static_cast<std::size_t>(opts.steps), opts.window);
    m.initial_environment = random_unit_vector(d, source);
    validate(m);
    m.weak = derive_weak_structure(m);
    return m;
}

/// Same instance at a different coupling, with the weak structure rederived.
inline FiniteRmModel with_coupling(FiniteRmModel m, double coupling) {
    m.coupling = coupling;
    m.weak = derive_weak_structure(m);
    return m;
}

}  // namespace udwrm::oracle
