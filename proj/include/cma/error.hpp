#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cma {

enum class ErrorCode {
    invalid_argument,
    axis_out_of_range,
    grid_mismatch,
    not_metric,
    not_positive,
    singular_matrix,
    gauduchon_kernel_not_positive,
    linear_solver_failed,
    max_iters_exceeded,
    positivity_lost,
    continuation_stalled,
    constraint_violated,
    not_closed,
    gauge_violated,
    version_mismatch,
    shape_mismatch,
    io_error,
    config_error,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::axis_out_of_range: return "axis_out_of_range";
    case ErrorCode::grid_mismatch: return "grid_mismatch";
    case ErrorCode::not_metric: return "not_metric";
    case ErrorCode::not_positive: return "not_positive";
    case ErrorCode::singular_matrix: return "singular_matrix";
    case ErrorCode::gauduchon_kernel_not_positive: return "gauduchon_kernel_not_positive";
    case ErrorCode::linear_solver_failed: return "linear_solver_failed";
    case ErrorCode::max_iters_exceeded: return "max_iters_exceeded";
    case ErrorCode::positivity_lost: return "positivity_lost";
    case ErrorCode::continuation_stalled: return "continuation_stalled";
    case ErrorCode::constraint_violated: return "constraint_violated";
    case ErrorCode::not_closed: return "not_closed";
    case ErrorCode::gauge_violated: return "gauge_violated";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::config_error: return "config_error";
    }
    return "unknown";
}

/// Exception carrying a machine-readable code next to the human message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message)
    {
    }

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace cma
