#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trajid {

enum class ErrorCode {
    SingularMatrix,
    NonConvergence,
    DegenerateSpectrum,
    NoRealLog,
    ZeroEigenvalue,
    StepUnderflow,
    StateBlowup,
    StepLimit,
    NotPeriodic,
    LinearlyDependentData,
    NonUniformSpacing,
    NoRealSolution,
    StructureViolation,
    DomainError,
    DegenerateGeometry,
    SingularIntegrand,
    NoRoot,
    NoConvergence,
    IntegrationBlowup,
    StepFailure,
    LossOfFold,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Typed failure raised by every module. The code is stable and is what the
/// CLI records in its artifacts; the message carries human context.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace trajid
