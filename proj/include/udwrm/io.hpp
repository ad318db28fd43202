#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "udwrm/error.hpp"
#include "udwrm/oracle.hpp"

namespace udwrm::io {

using Json = nlohmann::ordered_json;

/// 17 significant digits in scientific notation.
inline std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.16e", value);
    return buffer;
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
    return buffer;
}

using Cell = std::variant<double, std::int64_t, std::string>;

/// Column table emitted as CSV (header, comment lines, rows) or as JSON.
class Table {
public:
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns_.size()) throw Error(ErrorKind::input, "row width does not match the header");
        rows_.push_back(std::move(row));
    }

    void add_note(std::string key, std::string value) { notes_.emplace_back(std::move(key), std::move(value)); }

    void write_csv(std::ostream& out) const {
        for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
        out << '\n';
        for (const auto& [key, value] : notes_) out << "# " << key << '=' << value << '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << render(row[i]);
            out << '\n';
        }
    }

    void write_json(std::ostream& out) const {
        Json doc;
        doc["columns"] = columns_;
        for (const auto& [key, value] : notes_) doc["meta"][key] = value;
        doc["rows"] = Json::array();
        for (const auto& row : rows_) {
            Json item;
            for (std::size_t i = 0; i < row.size(); ++i)
                std::visit([&](const auto& v) { item[columns_[i]] = v; }, row[i]);
            doc["rows"].push_back(std::move(item));
        }
        out << doc.dump(2) << '\n';
    }

    std::size_t size() const noexcept { return rows_.size(); }

private:
    static std::string render(const Cell& cell) {
        if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
        if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
        return std::get<std::string>(cell);
    }

    std::vector<std::string> columns_;
    std::vector<std::pair<std::string, std::string>> notes_;
    std::vector<std::vector<Cell>> rows_;
};

// ---------------------------------------------------------------------------
// Finite-dimensional model serialisation: matrices as row-major nested
// arrays of [re, im] pairs.

inline Json matrix_to_json(const oracle::Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

inline oracle::Matrix matrix_from_json(const Json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw Error(ErrorKind::input, field + ": expected a nested array of [re, im] pairs");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    oracle::Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw Error(ErrorKind::input, field + ": ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& pair = row[static_cast<std::size_t>(c)];
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
                throw Error(ErrorKind::input, field + ": entries must be [re, im] pairs");
            m(r, c) = {pair[0].get<double>(), pair[1].get<double>()};
        }
    }
    return m;
}

inline Json vector_to_json(const oracle::Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
    return out;
}

inline oracle::Vector vector_from_json(const Json& j, const std::string& field) {
    if (!j.is_array()) throw Error(ErrorKind::input, field + ": expected an array of [re, im] pairs");
    oracle::Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& pair = j[i];
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
            throw Error(ErrorKind::input, field + ": entries must be [re, im] pairs");
        v(static_cast<Eigen::Index>(i)) = {pair[0].get<double>(), pair[1].get<double>()};
    }
    return v;
}

namespace detail {

inline Json operator_lists_to_json(const std::vector<std::vector<oracle::Matrix>>& lists) {
    Json out = Json::array();
    for (const auto& list : lists) {
        Json step = Json::array();
        for (const auto& m : list) step.push_back(matrix_to_json(m));
        out.push_back(std::move(step));
    }
    return out;
}

inline std::vector<oracle::Matrix> operators_from_json(const Json& j, const std::string& field) {
    if (!j.is_array()) throw Error(ErrorKind::input, field + ": expected an array of matrices");
    std::vector<oracle::Matrix> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(matrix_from_json(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace detail

inline Json model_to_json(const oracle::FiniteRmModel& m) {
    Json j;
    j["gap"] = m.gap;
    j["environment_dimension"] = m.environment_dim;
    j["coupling_lambda"] = m.coupling;
    j["detector_hamiltonian"] = matrix_to_json(m.detector_hamiltonian);
    j["interactions"] = Json::array();
    for (const auto& h : m.interactions) j["interactions"].push_back(matrix_to_json(h));
    j["window_weights"] = m.window_weights;
    j["initial_environment"] = vector_to_json(m.initial_environment);
    if (m.weak) {
        Json w;
        w["coupling_epsilon"] = m.weak->coupling_epsilon;
        w["detector_unitary"] = matrix_to_json(m.weak->detector_unitary);
        w["first_detector"] = Json::array();
        for (const auto& a : m.weak->first_detector) w["first_detector"].push_back(matrix_to_json(a));
        w["first_environment"] = detail::operator_lists_to_json(m.weak->first_environment);
        w["second_detector"] = Json::array();
        for (const auto& c : m.weak->second_detector) w["second_detector"].push_back(matrix_to_json(c));
        w["second_environment"] = detail::operator_lists_to_json(m.weak->second_environment);
        j["weak_structure"] = std::move(w);
    }
    return j;
}

/// Parses a model; a supplied weak structure is checked for unitarity order
/// by order, a missing one is derived from the hamiltonians when possible.
inline oracle::FiniteRmModel model_from_json_unchecked(const Json& j) {
    auto need = [&](const char* key) -> const Json& {
        if (!j.contains(key)) throw Error(ErrorKind::input, std::string(key) + ": missing");
        return j.at(key);
    };
    oracle::FiniteRmModel m;
    m.gap = need("gap").get<double>();
    m.environment_dim = need("environment_dimension").get<int>();
    m.coupling = need("coupling_lambda").get<double>();
    m.detector_hamiltonian = matrix_from_json(need("detector_hamiltonian"), "detector_hamiltonian");
    m.interactions = detail::operators_from_json(need("interactions"), "interactions");
    m.window_weights = need("window_weights").get<std::vector<double>>();
    m.initial_environment = vector_from_json(need("initial_environment"), "initial_environment");
    oracle::validate(m);
    if (j.contains("weak_structure")) {
        const auto& w = j.at("weak_structure");
        oracle::WeakStructure ws;
        ws.coupling_epsilon = w.at("coupling_epsilon").get<double>();
        ws.detector_unitary = matrix_from_json(w.at("detector_unitary"), "weak_structure.detector_unitary");
        ws.first_detector = detail::operators_from_json(w.at("first_detector"), "weak_structure.first_detector");
        ws.second_detector = detail::operators_from_json(w.at("second_detector"), "weak_structure.second_detector");
        for (const auto& step : w.at("first_environment"))
            ws.first_environment.push_back(detail::operators_from_json(step, "weak_structure.first_environment"));
        for (const auto& step : w.at("second_environment"))
            ws.second_environment.push_back(detail::operators_from_json(step, "weak_structure.second_environment"));
        for (int k = 0; k < static_cast<int>(ws.first_environment.size()); ++k) oracle::check_weak_structure(ws, k);
        m.weak = std::move(ws);
    } else {
        bool uniform = true;
        for (double w : m.window_weights) uniform = uniform && w == m.window_weights.front();
        if (uniform && m.steps() > 0) m.weak = oracle::derive_weak_structure(m);
    }
    return m;
}

/// Model from JSON; malformed values are reported as input errors.
inline oracle::FiniteRmModel model_from_json(const Json& j) {
    try {
        return model_from_json_unchecked(j);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::input, std::string("malformed model: ") + e.what());
    }
}

}  // namespace udwrm::io
