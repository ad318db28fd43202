#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "udwrm/error.hpp"
#include "udwrm/kernel.hpp"
#include "udwrm/response.hpp"
#include "udwrm/schedule.hpp"

namespace udwrm::config {

struct TransitionBlock {
    std::vector<double> omega_values{0.2};
    std::vector<double> acceleration_values{0.1};
};

struct StringBlock {
    int string_length = 4;
};

struct BoundsBlock {
    double q_probability = 0.1;
    double gamma_ratio = 0.01;
    int n_max = 60;
};

struct OutcomeRecord {
    std::string bits;
    std::vector<std::array<double, 2>> corrections;  // per step Q1 for outcomes 0 and 1
};

struct BayesBlock {
    int grid_size = 1024;
    double coupling_epsilon = 0.0;
    double kappa = 1.0;
    std::vector<OutcomeRecord> outcomes;
};

struct OracleBlock {
    std::optional<std::string> model_path;
    int environment_dimension = 8;
    int steps = 10;
    double coupling_lambda = 1e-2;
    double drive = 0.3;
    int instances = 10;
};

struct CombinatoricsBlock {
    int max_order = 8;
};

/// Validated run configuration. Field names in the JSON carry their units.
struct RunConfig {
    double omega = 0.2;
    double coupling = 1e-2;
    std::string trajectory = "inertial";
    double acceleration = 0.1;
    std::string profile = "truncated_gaussian";
    double sigma = 1.0;
    double bump_half_width = 4.0;
    double t_on = 8.0;
    double t_off = 80.0;
    bool override_t_on = false;
    int interval_count = 4;
    double regulator_epsilon = 0.1;
    std::string q_source = "closed_form";
    int gl_order = 32;
    int qmc_points_log2 = 20;
    double tolerance = 1e-8;

    TransitionBlock transition;
    StringBlock strings;
    BoundsBlock bounds;
    BayesBlock bayes;
    OracleBlock oracle;
    CombinatoricsBlock combinatorics;

    /// Resolved configuration, defaults included, in a canonical key order.
    nlohmann::json canonical() const;
};

/// Field-level validation failure; what() lists every problem, one per line.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(ErrorKind::input, join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& problems) {
        std::string text = "invalid config:";
        for (const auto& p : problems) text += "\n  " + p;
        return text;
    }

    std::vector<std::string> problems_;
};

namespace detail {

class Reader {
public:
    Reader(const nlohmann::json& object, std::string prefix, std::vector<std::string>& problems)
        : object_(object), prefix_(std::move(prefix)), problems_(problems) {
        if (!object_.is_object()) problem("", "expected an object");
    }

    template <class T>
    void read(const char* key, T& target) {
        seen_.insert(key);
        if (!object_.is_object() || !object_.contains(key)) return;
        try {
            target = object_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            problem(key, "has the wrong type");
        }
    }

    void positive(const char* key, double value) {
        if (!(value > 0.0) || !std::isfinite(value)) problem(key, "must be a finite number > 0");
    }

    void in_range(const char* key, long value, long lo, long hi) {
        if (value < lo || value > hi)
            problem(key, "must lie in " + std::to_string(lo) + ".." + std::to_string(hi));
    }

    void one_of(const char* key, const std::string& value, std::initializer_list<const char*> options) {
        for (const char* option : options)
            if (value == option) return;
        std::string list;
        for (const char* option : options) list += std::string(list.empty() ? "" : ", ") + option;
        problem(key, "must be one of: " + list);
    }

    const nlohmann::json* block(const char* key) {
        seen_.insert(key);
        if (!object_.is_object() || !object_.contains(key)) return nullptr;
        return &object_.at(key);
    }

    void reject_unknown() {
        if (!object_.is_object()) return;
        for (const auto& item : object_.items())
            if (!seen_.count(item.key())) problem(item.key(), "is not a recognised field");
    }

    void problem(const std::string& key, const std::string& message) {
        problems_.push_back(prefix_ + key + ": " + message);
    }

private:
    const nlohmann::json& object_;
    std::string prefix_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig parse(const nlohmann::json& doc) {
    std::vector<std::string> problems;
    RunConfig c;
    detail::Reader top(doc, "", problems);
    top.read("omega_per_propertime", c.omega);
    top.read("coupling_lambda", c.coupling);
    top.read("trajectory", c.trajectory);
    top.read("acceleration_per_propertime", c.acceleration);
    top.read("profile", c.profile);
    top.read("sigma_propertime", c.sigma);
    top.read("bump_half_width_propertime", c.bump_half_width);
    const bool on_time_given = doc.is_object() && doc.contains("t_on_propertime");
    const bool off_time_given = doc.is_object() && doc.contains("t_off_propertime");
    if (!on_time_given) c.t_on = 8.0 * c.sigma;
    if (!off_time_given) c.t_off = 10.0 * c.t_on;
    top.read("t_on_propertime", c.t_on);
    top.read("t_off_propertime", c.t_off);
    top.read("override_t_on", c.override_t_on);
    top.read("interval_count", c.interval_count);
    top.read("regulator_epsilon_propertime", c.regulator_epsilon);
    top.read("q_source", c.q_source);
    top.read("gl_order", c.gl_order);
    top.read("qmc_points_log2", c.qmc_points_log2);
    top.read("tolerance", c.tolerance);

    top.positive("omega_per_propertime", c.omega);
    top.positive("coupling_lambda", c.coupling);
    top.one_of("trajectory", c.trajectory, {"inertial", "accelerated"});
    top.positive("acceleration_per_propertime", c.acceleration);
    top.one_of("profile", c.profile, {"truncated_gaussian", "gaussian", "bump"});
    top.positive("sigma_propertime", c.sigma);
    top.positive("bump_half_width_propertime", c.bump_half_width);
    top.positive("t_on_propertime", c.t_on);
    top.positive("t_off_propertime", c.t_off);
    if (c.profile != "bump" && !c.override_t_on && std::abs(c.t_on - 8.0 * c.sigma) > 1e-12 * c.t_on)
        top.problem("t_on_propertime", "must equal 8 sigma_propertime unless override_t_on is true");
    if (c.profile == "bump" && c.bump_half_width > 0.5 * c.t_on)
        top.problem("bump_half_width_propertime", "must not exceed t_on_propertime / 2");
    top.in_range("interval_count", c.interval_count, 1, 64);
    top.positive("regulator_epsilon_propertime", c.regulator_epsilon);
    top.one_of("q_source", c.q_source, {"closed_form", "direct"});
    top.in_range("gl_order", c.gl_order, 2, 256);
    top.in_range("qmc_points_log2", c.qmc_points_log2, 8, 30);
    top.positive("tolerance", c.tolerance);

    if (const auto* j = top.block("transition")) {
        detail::Reader r(*j, "transition.", problems);
        r.read("omega_values_per_propertime", c.transition.omega_values);
        r.read("acceleration_values_per_propertime", c.transition.acceleration_values);
        for (double w : c.transition.omega_values) r.positive("omega_values_per_propertime", w);
        for (double a : c.transition.acceleration_values) r.positive("acceleration_values_per_propertime", a);
        r.reject_unknown();
    }
    if (const auto* j = top.block("string_probs")) {
        detail::Reader r(*j, "string_probs.", problems);
        r.read("string_length", c.strings.string_length);
        r.in_range("string_length", c.strings.string_length, 1, 6);
        r.reject_unknown();
    }
    if (const auto* j = top.block("bounds")) {
        detail::Reader r(*j, "bounds.", problems);
        r.read("q_probability", c.bounds.q_probability);
        r.read("gamma_ratio", c.bounds.gamma_ratio);
        r.read("n_max", c.bounds.n_max);
        if (!(c.bounds.q_probability > 0.0 && c.bounds.q_probability < 1.0))
            r.problem("q_probability", "must lie in (0, 1)");
        if (!(c.bounds.gamma_ratio >= 0.0 && c.bounds.gamma_ratio < 1.0))
            r.problem("gamma_ratio", "must lie in [0, 1)");
        r.in_range("n_max", c.bounds.n_max, 1, 10000);
        r.reject_unknown();
    }
    if (const auto* j = top.block("bayes")) {
        detail::Reader r(*j, "bayes.", problems);
        r.read("grid_size", c.bayes.grid_size);
        r.read("coupling_epsilon", c.bayes.coupling_epsilon);
        r.read("kappa", c.bayes.kappa);
        r.in_range("grid_size", c.bayes.grid_size, 2, 1 << 20);
        if (!(c.bayes.coupling_epsilon >= 0.0)) r.problem("coupling_epsilon", "must be >= 0");
        r.positive("kappa", c.bayes.kappa);
        if (const auto* outcomes = r.block("outcomes")) {
            if (!outcomes->is_array()) r.problem("outcomes", "expected an array");
            for (std::size_t i = 0; outcomes->is_array() && i < outcomes->size(); ++i) {
                detail::Reader o((*outcomes)[i], "bayes.outcomes[" + std::to_string(i) + "].", problems);
                OutcomeRecord record;
                o.read("bits", record.bits);
                o.read("corrections", record.corrections);
                if (record.bits.empty() || record.bits.find_first_not_of("01") != std::string::npos)
                    o.problem("bits", "must be a non-empty string of 0 and 1");
                if (!record.corrections.empty() && record.corrections.size() != record.bits.size())
                    o.problem("corrections", "needs one [Q1_0, Q1_1] pair per bit");
                o.reject_unknown();
                c.bayes.outcomes.push_back(std::move(record));
            }
        }
        r.reject_unknown();
    }
    if (const auto* j = top.block("oracle")) {
        detail::Reader r(*j, "oracle.", problems);
        std::string path;
        r.read("model_path", path);
        if (!path.empty()) c.oracle.model_path = path;
        r.read("environment_dimension", c.oracle.environment_dimension);
        r.read("steps", c.oracle.steps);
        r.read("coupling_lambda", c.oracle.coupling_lambda);
        r.read("drive", c.oracle.drive);
        r.read("instances", c.oracle.instances);
        r.in_range("environment_dimension", c.oracle.environment_dimension, 1, 64);
        r.in_range("steps", c.oracle.steps, 1, 20);
        r.positive("coupling_lambda", c.oracle.coupling_lambda);
        r.in_range("instances", c.oracle.instances, 1, 1000);
        r.reject_unknown();
    }
    if (const auto* j = top.block("combinatorics")) {
        detail::Reader r(*j, "combinatorics.", problems);
        r.read("max_order", c.combinatorics.max_order);
        r.in_range("max_order", c.combinatorics.max_order, 2, 20);
        r.reject_unknown();
    }
    top.reject_unknown();
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return c;
}

inline nlohmann::json RunConfig::canonical() const {
    nlohmann::json j;  // std::map ordering gives sorted keys
    j["omega_per_propertime"] = omega;
    j["coupling_lambda"] = coupling;
    j["trajectory"] = trajectory;
    j["acceleration_per_propertime"] = acceleration;
    j["profile"] = profile;
    j["sigma_propertime"] = sigma;
    j["bump_half_width_propertime"] = bump_half_width;
    j["t_on_propertime"] = t_on;
    j["t_off_propertime"] = t_off;
    j["override_t_on"] = override_t_on;
    j["interval_count"] = interval_count;
    j["regulator_epsilon_propertime"] = regulator_epsilon;
    j["q_source"] = q_source;
    j["gl_order"] = gl_order;
    j["qmc_points_log2"] = qmc_points_log2;
    j["tolerance"] = tolerance;
    j["transition"] = {{"omega_values_per_propertime", transition.omega_values},
                       {"acceleration_values_per_propertime", transition.acceleration_values}};
    j["string_probs"] = {{"string_length", strings.string_length}};
    j["bounds"] = {{"q_probability", bounds.q_probability},
                   {"gamma_ratio", bounds.gamma_ratio},
                   {"n_max", bounds.n_max}};
    nlohmann::json outcomes = nlohmann::json::array();
    for (const auto& o : bayes.outcomes) outcomes.push_back({{"bits", o.bits}, {"corrections", o.corrections}});
    j["bayes"] = {{"grid_size", bayes.grid_size},
                  {"coupling_epsilon", bayes.coupling_epsilon},
                  {"kappa", bayes.kappa},
                  {"outcomes", outcomes}};
    j["oracle"] = {{"model_path", oracle.model_path.value_or("")},
                   {"environment_dimension", oracle.environment_dimension},
                   {"steps", oracle.steps},
                   {"coupling_lambda", oracle.coupling_lambda},
                   {"drive", oracle.drive},
                   {"instances", oracle.instances}};
    j["combinatorics"] = {{"max_order", combinatorics.max_order}};
    return j;
}

inline Worldline worldline(const RunConfig& c) {
    if (c.trajectory == "accelerated") return Accelerated{c.acceleration};
    return Inertial{};
}

inline RepetitionSchedule schedule(const RunConfig& c) {
    RepetitionSchedule s;
    s.on_time = c.t_on;
    s.off_time = c.t_off;
    s.count = c.interval_count;
    if (c.profile == "gaussian")
        s.profile = Gaussian{c.sigma};
    else if (c.profile == "bump")
        s.profile = Bump{c.bump_half_width};
    else
        s.profile = TruncatedGaussian{c.sigma};
    return s;
}

inline ResponseContext response_context(const RunConfig& c, std::uint64_t seed, int jobs) {
    ResponseContext ctx{WightmanKernel{worldline(c), c.regulator_epsilon}, schedule(c),
                        DetectorParams{c.omega, c.coupling}, {}, QSource::closed_form, {}};
    ctx.quadrature.gl_order = c.gl_order;
    ctx.quadrature.qmc_log2_points = c.qmc_points_log2;
    ctx.quadrature.seed = seed;
    ctx.quadrature.jobs = jobs;
    ctx.q_source = c.q_source == "direct" ? QSource::direct : QSource::closed_form;
    ctx.direct.rel_tolerance = c.tolerance;
    return ctx;
}

}  // namespace udwrm::config
