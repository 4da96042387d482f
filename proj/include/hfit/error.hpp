#pragma once

#include <stdexcept>
#include <string>

namespace hfit {

/// Error categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
    invalid_argument = 1,
    length_mismatch,
    invariant_violation,
    file_not_found,
    ragged_row,
    non_numeric,
    parse_error,
    config_error,
    feature_mismatch,
    no_pareto_front,
    degenerate,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what)
        , kind_(kind)
    {
    }

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

/// Process exit code for an error category (always > 1).
[[nodiscard]] inline int exit_code(ErrorKind kind) noexcept { return 1 + static_cast<int>(kind); }

} // namespace hfit
