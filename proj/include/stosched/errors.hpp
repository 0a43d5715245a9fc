#pragma once

#include <stdexcept>
#include <string>

namespace stosched {

/// Stable error identifiers surfaced by the CLI and carried by DomainError.
enum class ErrorCode {
    // instance validation
    NonPositiveWeight,
    NegativeSize,
    TwoPointOrderViolation,
    ProbabilityOutOfRange,
    DuplicateJobId,
    EmptyInstance,
    InvalidMachineCount,
    // enumeration / evaluation
    EnumerationCapExceeded,
    SptOnStochastic,
    ZeroExpectationWsept,
    NotAPermutation,
    UnknownJobId,
    ConditionOnDeterministicJob,
    // optimal-policy computation
    DpCapExceeded,
    BoundsDoNotBracket,
    // reductions
    TooManyItems,
    InvalidKnapsack,
    TotalSizeTooSmall,
    NotRestricted,
    NonIntegerCount,
    OptimalDiffersFromSept,
};

inline const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
        case ErrorCode::NegativeSize: return "NegativeSize";
        case ErrorCode::TwoPointOrderViolation: return "TwoPointOrderViolation";
        case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
        case ErrorCode::DuplicateJobId: return "DuplicateJobId";
        case ErrorCode::EmptyInstance: return "EmptyInstance";
        case ErrorCode::InvalidMachineCount: return "InvalidMachineCount";
        case ErrorCode::EnumerationCapExceeded: return "EnumerationCapExceeded";
        case ErrorCode::SptOnStochastic: return "SptOnStochastic";
        case ErrorCode::ZeroExpectationWsept: return "ZeroExpectationWsept";
        case ErrorCode::NotAPermutation: return "NotAPermutation";
        case ErrorCode::UnknownJobId: return "UnknownJobId";
        case ErrorCode::ConditionOnDeterministicJob: return "ConditionOnDeterministicJob";
        case ErrorCode::DpCapExceeded: return "DpCapExceeded";
        case ErrorCode::BoundsDoNotBracket: return "BoundsDoNotBracket";
        case ErrorCode::TooManyItems: return "TooManyItems";
        case ErrorCode::InvalidKnapsack: return "InvalidKnapsack";
        case ErrorCode::TotalSizeTooSmall: return "TotalSizeTooSmall";
        case ErrorCode::NotRestricted: return "NotRestricted";
        case ErrorCode::NonIntegerCount: return "NonIntegerCount";
        case ErrorCode::OptimalDiffersFromSept: return "OptimalDiffersFromSept";
    }
    return "UnknownError";
}

/// Library-level failure with a stable code. The CLI maps these to exit
/// status 1 and prints the code name alongside the message.
class DomainError : public std::runtime_error {
  public:
    DomainError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace stosched
