#include "vfphase/error.hpp"

namespace vfphase {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::degenerate_input: return "degenerate-input";
    case ErrorCode::ill_conditioned_fit: return "ill-conditioned-fit";
    case ErrorCode::singular_phase_velocity: return "singular-phase-velocity";
    case ErrorCode::solver_failure: return "solver-failure";
    case ErrorCode::numerical_divergence: return "numerical-divergence";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::end_of_scenario: return "end-of-scenario";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::validation_error: return "validation-error";
    case ErrorCode::rejected_input: return "rejected-input";
    case ErrorCode::protocol_error: return "protocol-error";
    }
    return "unknown";
}

}  // namespace vfphase
