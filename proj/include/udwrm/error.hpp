#pragma once

#include <stdexcept>
#include <string>

namespace udwrm {

enum class ErrorKind {
    domain,
    range,
    input,
    numerical,
    truncation,
    hypothesis_violation,
    horizon_exceeded,
    bound_violation,
    degenerate_evidence,
    model,
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::domain: return "domain error";
    case ErrorKind::range: return "range error";
    case ErrorKind::input: return "input error";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::truncation: return "truncation error";
    case ErrorKind::hypothesis_violation: return "hypothesis violation";
    case ErrorKind::horizon_exceeded: return "horizon exceeded";
    case ErrorKind::bound_violation: return "bound violation";
    case ErrorKind::degenerate_evidence: return "degenerate evidence";
    case ErrorKind::model: return "model error";
    }
    return "error";
}

// Every failure raised by the library carries a kind so callers can branch
// without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace udwrm
