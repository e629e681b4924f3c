#pragma once

#include <stdexcept>
#include <string>

namespace snowgt {

// Every failure raised by the library derives from Error; code() is the
// stable machine-readable tag that also appears in HTTP error bodies.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& what) : Error("dimension_mismatch", what) {}
};

struct InsufficientFrames : Error {
    explicit InsufficientFrames(const std::string& what) : Error("insufficient_frames", what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error("io_error", what) {}
};

struct BoundsError : Error {
    explicit BoundsError(const std::string& what) : Error("bounds_error", what) {}
};

struct NumericFailure : Error {
    explicit NumericFailure(const std::string& what) : Error("numeric_failure", what) {}
};

struct ParameterError : Error {
    explicit ParameterError(const std::string& what) : Error("parameter_error", what) {}
};

struct ConflictError : Error {
    explicit ConflictError(const std::string& what) : Error("conflict", what) {}
};

struct NotFoundError : Error {
    explicit NotFoundError(const std::string& what) : Error("not_found", what) {}
};

struct InvalidTransition : Error {
    explicit InvalidTransition(const std::string& what) : Error("invalid_transition", what) {}
};

struct NothingSelected : Error {
    explicit NothingSelected(const std::string& what) : Error("nothing_selected", what) {}
};

} // namespace snowgt
