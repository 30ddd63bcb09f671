#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace promptaid {

enum class ErrorCode {
    // input / user errors
    MissingFile,
    SchemaError,
    EmptyClass,
    InvalidTemplate,
    InvalidArgument,
    UnknownTemplate,
    UnknownDataset,
    UnknownModel,
    DimensionMismatch,
    EmptyIndex,
    ZeroVector,
    EmptyBank,
    MissingKShot,
    TargetNotMutable,
    TargetNotFound,
    RedundantReplacement,
    InsufficientExamples,
    NoMutableWords,
    NoParaphrases,
    DegenerateInput,
    NotEvaluated,
    UnknownParent,
    DuplicateId,
    CycleError,
    SchemaVersionMismatch,
    ConfigError,
    NotFound,
    // upstream model/embedding backends
    GatewayUnavailable,
    Timeout,
    MalformedResponse,
    // environment
    IoError,
    BindError,
    Internal,
};

enum class ErrorClass { Client, Gateway, Internal };

constexpr std::string_view to_string(ErrorCode c) noexcept {
    switch (c) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::InvalidTemplate: return "InvalidTemplate";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyBank: return "EmptyBank";
    case ErrorCode::MissingKShot: return "MissingKShot";
    case ErrorCode::TargetNotMutable: return "TargetNotMutable";
    case ErrorCode::TargetNotFound: return "TargetNotFound";
    case ErrorCode::RedundantReplacement: return "RedundantReplacement";
    case ErrorCode::InsufficientExamples: return "InsufficientExamples";
    case ErrorCode::NoMutableWords: return "NoMutableWords";
    case ErrorCode::NoParaphrases: return "NoParaphrases";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NotEvaluated: return "NotEvaluated";
    case ErrorCode::UnknownParent: return "UnknownParent";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::CycleError: return "CycleError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::GatewayUnavailable: return "GatewayUnavailable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BindError: return "BindError";
    case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

constexpr ErrorClass classify(ErrorCode c) noexcept {
    switch (c) {
    case ErrorCode::GatewayUnavailable:
    case ErrorCode::Timeout:
    case ErrorCode::MalformedResponse:
        return ErrorClass::Gateway;
    case ErrorCode::IoError:
    case ErrorCode::BindError:
    case ErrorCode::Internal:
        return ErrorClass::Internal;
    default:
        return ErrorClass::Client;
    }
}

/// Every failure raised by the library. `detail` carries context such as the
/// offending data-point id or file path.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string detail = {})
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code), message_(std::move(message)), detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorClass error_class() const noexcept { return classify(code_); }
    const std::string& message() const noexcept { return message_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string message_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, std::string message, std::string detail = {}) {
    throw Error(code, std::move(message), std::move(detail));
}

} // namespace promptaid
