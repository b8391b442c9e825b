#ifndef TARGETOPT_ERROR_HPP
#define TARGETOPT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace targetopt {

/// Error categories raised by the library. The CLI maps them onto exit codes.
enum class ErrorCode {
    InsufficientData,
    DegenerateColumn,
    InvalidArgument,
    SingularNormalEquations,
    IdenticallyZero,
    EmptyInterval,
    AllWeightsDegenerate,
    UnknownModelId,
    LengthMismatch,
    OracleFailure,
    StateCorrupt,
    SchemaMismatch,
    ConfigError,
};

inline const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::IdenticallyZero: return "IdenticallyZero";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::AllWeightsDegenerate: return "AllWeightsDegenerate";
    case ErrorCode::UnknownModelId: return "UnknownModelId";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::OracleFailure: return "OracleFailure";
    case ErrorCode::StateCorrupt: return "StateCorrupt";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace targetopt

#endif
