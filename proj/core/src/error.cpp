#include "trajid/error.hpp"

namespace trajid {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::SingularMatrix: return "SingularMatrix";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
        case ErrorCode::NoRealLog: return "NoRealLog";
        case ErrorCode::ZeroEigenvalue: return "ZeroEigenvalue";
        case ErrorCode::StepUnderflow: return "StepUnderflow";
        case ErrorCode::StateBlowup: return "StateBlowup";
        case ErrorCode::StepLimit: return "StepLimit";
        case ErrorCode::NotPeriodic: return "NotPeriodic";
        case ErrorCode::LinearlyDependentData: return "LinearlyDependentData";
        case ErrorCode::NonUniformSpacing: return "NonUniformSpacing";
        case ErrorCode::NoRealSolution: return "NoRealSolution";
        case ErrorCode::StructureViolation: return "StructureViolation";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
        case ErrorCode::SingularIntegrand: return "SingularIntegrand";
        case ErrorCode::NoRoot: return "NoRoot";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::IntegrationBlowup: return "IntegrationBlowup";
        case ErrorCode::StepFailure: return "StepFailure";
        case ErrorCode::LossOfFold: return "LossOfFold";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace trajid
