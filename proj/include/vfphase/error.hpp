#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vfphase {

enum class ErrorCode {
    invalid_parameter,
    degenerate_input,
    ill_conditioned_fit,
    singular_phase_velocity,
    solver_failure,
    numerical_divergence,
    invalid_input,
    end_of_scenario,
    parse_error,
    io_error,
    validation_error,
    rejected_input,
    protocol_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace vfphase
