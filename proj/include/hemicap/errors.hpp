#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hemicap {

enum class ErrorCode {
    InvalidArgument,
    BehindCamera,
    DegenerateConfiguration,
    WrongMarker,
    NotVisible,
    AlreadyCollected,
    Validation,
    SessionState,
    NotFound,
    Storage,
    Integrity,
    Precondition,
    Versioning,
    Parse,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct FieldError {
    std::string field;
    std::string message;
};

// Raised for rejected configuration payloads; carries every offending field.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<FieldError> fields);
    ValidationError(std::string field, std::string message)
        : ValidationError(std::vector<FieldError>{{std::move(field), std::move(message)}}) {}
    const std::vector<FieldError>& fields() const noexcept { return fields_; }

private:
    std::vector<FieldError> fields_;
};

}  // namespace hemicap
