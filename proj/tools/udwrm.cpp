#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "udwrm/bayes.hpp"
#include "udwrm/bounds.hpp"
#include "udwrm/combinatorics.hpp"
#include "udwrm/config.hpp"
#include "udwrm/io.hpp"
#include "udwrm/oracle.hpp"
#include "udwrm/response.hpp"
#include "udwrm/strings.hpp"

namespace {

using namespace udwrm;
using io::Table;

enum Exit { ok = 0, failed_checks = 1, usage = 2, bad_config = 3, module_error = 4 };

struct Options {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    std::uint64_t seed = 0;
    int jobs = 1;
};

config::RunConfig load_config(const std::string& path) {
    if (path.empty()) return config::parse(nlohmann::json::object());
    std::ifstream in(path);
    if (!in) throw config::ConfigError({"--config: cannot open " + path});
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config::ConfigError({std::string("--config: not valid JSON (") + e.what() + ")"});
    }
    return config::parse(doc);
}

void stamp(Table& table, const config::RunConfig& cfg, const Options& opts) {
    auto canonical = cfg.canonical();
    canonical["seed"] = opts.seed;
    table.add_note("config_hash", io::fnv1a_hex(canonical.dump()));
    table.add_note("seed", std::to_string(opts.seed));
}

Table transition_table(const config::RunConfig& cfg, const Options& opts) {
    Table table({"omega_per_propertime", "trajectory", "acceleration_per_propertime", "q", "abs_error", "method",
                 "relative_to_inertial", "unruh_temperature"});
    for (double omega : cfg.transition.omega_values) {
        auto c = cfg;
        c.omega = omega;
        c.trajectory = "inertial";
        const auto inertial = ResponseModel(config::response_context(c, opts.seed, opts.jobs)).excitation();
        table.add_row({omega, std::string("inertial"), 0.0, inertial.value, inertial.abs_error,
                       std::string(to_string(inertial.method)), 0.0, 0.0});
        for (double alpha : cfg.transition.acceleration_values) {
            c.trajectory = "accelerated";
            c.acceleration = alpha;
            const auto accelerated = ResponseModel(config::response_context(c, opts.seed, opts.jobs)).excitation();
            table.add_row({omega, std::string("accelerated"), alpha, accelerated.value, accelerated.abs_error,
                           std::string(to_string(accelerated.method)), accelerated.value / inertial.value - 1.0,
                           *unruh_temperature(Accelerated{alpha})});
        }
    }
    return table;
}

Table string_table(const config::RunConfig& cfg, const Options& opts) {
    auto c = cfg;
    const int length = cfg.strings.string_length;
    c.interval_count = std::max(c.interval_count, length);
    ResponseModel model(config::response_context(c, opts.seed, opts.jobs));
    const double q = model.q();
    const double gamma = gamma_of(config::worldline(c), config::schedule(c));
    Table table({"id", "bits", "p_born", "p_rm", "log_ratio", "abs_error", "method", "ratio_lower", "ratio_upper"});
    table.add_note("q", io::format_double(q));
    table.add_note("gamma", io::format_double(gamma));
    for (std::uint64_t id = 0; id < (std::uint64_t{1} << length); ++id) {
        const auto bits = BitString::from_id(length, id);
        const auto eval = rm_string_prob(bits, model);
        const auto bracket = ratio_bounds(bits, q, gamma);
        table.add_row({static_cast<std::int64_t>(id), bits.text(), eval.born, eval.rm(), eval.log_ratio,
                       eval.abs_error, std::string(to_string(eval.method)), bracket.lower, bracket.upper});
    }
    return table;
}

Table bounds_table(const config::RunConfig& cfg) {
    const auto& b = cfg.bounds;
    Table table({"n", "lower", "upper", "rel_lower", "rel_upper", "upper_exceeds_one"});
    const auto horizon = n_limit(b.q_probability, b.gamma_ratio);
    table.add_note("n_limit", std::to_string(horizon.value));
    for (int n = 1; n <= b.n_max; ++n) {
        try {
            const auto pair = loose_bounds(n, b.q_probability, b.gamma_ratio);
            table.add_row({static_cast<std::int64_t>(n), pair.lower, pair.upper, pair.rel_lower, pair.rel_upper,
                           static_cast<std::int64_t>(pair.upper > 1.0)});
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::horizon_exceeded) throw;
            table.add_note("stopped_at", std::to_string(n));
            break;
        }
    }
    return table;
}

Table bayes_table(const config::RunConfig& cfg) {
    const auto& b = cfg.bayes;
    Table table({"update", "bits", "mass_born", "mass_corrected", "mean_q", "verdict_at_mean_q"});
    auto posterior = uniform_prior(b.grid_size);
    for (std::size_t i = 0; i < b.outcomes.size(); ++i) {
        const auto& record = b.outcomes[i];
        std::vector<std::uint8_t> raw;
        for (char ch : record.bits) raw.push_back(static_cast<std::uint8_t>(ch - '0'));
        const BitString bits(raw);
        std::vector<OutcomePair> corrections;
        for (const auto& pair : record.corrections) corrections.push_back({pair[0], pair[1]});
        if (corrections.empty()) corrections.assign(raw.size(), OutcomePair{0.0, 0.0});
        CorrectionModel model{b.coupling_epsilon,
                              [&](double q, const BitString& s) { return delta_p_first_order(corrections, q, s); }};
        posterior = update_posterior(posterior, bits, model);
        std::vector<double> weighted(posterior.q.size());
        for (std::size_t g = 0; g < weighted.size(); ++g)
            weighted[g] = posterior.q[g] * (posterior.born[g] + posterior.corrected[g]);
        const double mean_q = posterior.integrate(weighted);
        const double p = born_string_prob(bits, mean_q);
        const std::string verdict =
            p > 0.0 ? to_string(fapp_verdict(p, model.delta_p(mean_q, bits), b.coupling_epsilon, b.kappa))
                    : std::string("undefined");
        table.add_row({static_cast<std::int64_t>(i + 1), record.bits, posterior.mass_born(),
                       posterior.mass_corrected(), mean_q, verdict});
    }
    return table;
}

Table oracle_table(const config::RunConfig& cfg, const Options& opts, bool& all_passed) {
    const auto& o = cfg.oracle;
    Table table({"check", "instance", "value", "tolerance", "passed"});
    all_passed = true;
    auto add = [&](const std::string& check, std::int64_t instance, double value, double tolerance, bool passed) {
        all_passed = all_passed && passed;
        table.add_row({check, instance, value, tolerance, static_cast<std::int64_t>(passed)});
    };
    oracle::InstanceOptions inst;
    inst.environment_dim = o.environment_dimension;
    inst.steps = o.steps;
    inst.coupling = o.coupling_lambda;
    inst.drive = o.drive;

    if (o.model_path) {
        std::ifstream in(*o.model_path);
        if (!in) throw config::ConfigError({"oracle.model_path: cannot open " + *o.model_path});
        oracle::FiniteRmModel model;
        try {
            model = io::model_from_json(io::Json::parse(in));
        } catch (const io::Json::exception& e) {
            throw config::ConfigError({"oracle.model_path: " + std::string(e.what())});
        } catch (const Error& e) {
            throw config::ConfigError({"oracle.model_path: " + std::string(e.what())});
        }
        const auto dist = oracle::string_distribution(model, model.steps());
        CompensatedSum sum;
        for (double p : dist) sum.add(p);
        add("file_model_normalization", 0, std::abs(sum.value() - 1.0), 1e-10, std::abs(sum.value() - 1.0) <= 1e-10);
    }
    for (int i = 0; i < o.instances; ++i) {
        const std::uint64_t seed = opts.seed + static_cast<std::uint64_t>(i);
        const auto model = oracle::random_model(inst, seed);
        const auto dist = oracle::string_distribution(model, model.steps());
        CompensatedSum sum;
        for (double p : dist) sum.add(p);
        const double defect = std::abs(sum.value() - 1.0);
        add("normalization", i, defect, 1e-10, defect <= 1e-10);

        auto residual = [&](double eps) {
            const auto scaled = oracle::with_coupling(model, eps);
            const auto exact = oracle::step_distribution(oracle::step_unitary(scaled, 0), scaled.initial_environment);
            const auto terms = oracle::perturbative_corrections(scaled, 0, scaled.initial_environment);
            return std::abs(exact.probability[1] - terms.born[1] - eps * terms.first[1] -
                            eps * eps * terms.second[1]);
        };
        const double ratio = residual(o.coupling_lambda) / residual(0.5 * o.coupling_lambda);
        add("epsilon_halving_ratio", i, ratio, 0.2 * 8.0, std::abs(ratio - 8.0) <= 0.2 * 8.0);

        const auto iid = oracle::iid_model(inst, seed);
        const int length = std::min(4, iid.steps());
        double spread = 0.0;
        for (int ones = 0; ones <= length; ++ones) {
            double lo = 1.0, hi = 0.0;
            for (std::uint64_t id = 0; id < (std::uint64_t{1} << length); ++id) {
                const auto bits = BitString::from_id(length, id);
                if (bits.ones() != ones) continue;
                const double p = oracle::exact_string_prob(iid, bits);
                lo = std::min(lo, p);
                hi = std::max(hi, p);
            }
            spread = std::max(spread, hi - lo);
        }
        add("iid_permutation_spread", i, spread, 1e-12, spread <= 1e-12);
    }
    return table;
}

Table combinatorics_table(const config::RunConfig& cfg) {
    Table table({"k", "partitions", "restricted_partitions", "crossing_count", "double_factorial_over_sqrt_e",
                 "wick_term_count"});
    for (int k = 0; k <= cfg.combinatorics.max_order; ++k) {
        const std::string restricted = k < 2 ? "-" : std::to_string(restricted_partitions(k).size());
        table.add_row({static_cast<std::int64_t>(k), std::to_string(partition_count(k)), restricted,
                       to_string(crossing_count(k)), crossing_count_asymptote(k), to_string(wick_term_count(k))});
    }
    return table;
}

void emit(const Table& table, const Options& opts) {
    std::ostringstream buffer;
    if (opts.format == "json")
        table.write_json(buffer);
    else
        table.write_csv(buffer);
    if (opts.out_path.empty()) {
        std::cout << buffer.str();
        return;
    }
    std::ofstream out(opts.out_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::input, "cannot write " + opts.out_path);
    out << buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repeated-measurement statistics of an Unruh-DeWitt detector"};
    app.fallthrough();
    Options opts;
    app.add_option("--config", opts.config_path, "JSON run configuration");
    app.add_option("--out", opts.out_path, "output file (default stdout)");
    app.add_option("--format", opts.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", opts.seed, "QMC scramble and instance seed");
    app.add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* transition = app.add_subcommand("transition", "single-interval excitation probabilities");
    auto* strings = app.add_subcommand("string-probs", "Born and RM probabilities of every outcome string");
    auto* bounds = app.add_subcommand("bounds", "loose bounds on the n-th conditional excitation");
    auto* bayes = app.add_subcommand("bayes", "posterior trace over an outcome stream");
    auto* oracle_cmd = app.add_subcommand("oracle", "finite-dimensional verification suite");
    auto* combinatorics = app.add_subcommand("combinatorics", "partition and crossing-count tables");
    app.require_subcommand(0, 1);

    if (argc < 2) {
        std::cerr << app.help();
        return usage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return usage;
    }

    try {
        const auto cfg = load_config(opts.config_path);
        bool all_passed = true;
        Table table = transition->parsed()      ? transition_table(cfg, opts)
                      : strings->parsed()       ? string_table(cfg, opts)
                      : bounds->parsed()        ? bounds_table(cfg)
                      : bayes->parsed()         ? bayes_table(cfg)
                      : oracle_cmd->parsed()    ? oracle_table(cfg, opts, all_passed)
                      : combinatorics->parsed() ? combinatorics_table(cfg)
                                                : Table({});
        stamp(table, cfg, opts);
        emit(table, opts);
        return all_passed ? ok : failed_checks;
    } catch (const config::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return bad_config;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return module_error;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON input: " << e.what() << '\n';
        return bad_config;
    }
}
