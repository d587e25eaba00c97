#pragma once

#include <stdexcept>
#include <string>

namespace inboxaudit {

enum class ErrorKind {
    Range,
    Parse,
    Format,
    Integrity,
    Io,
    InsufficientData,
    Shape,
    Undefined,
    Infeasible,
    Transport,
    Protocol,
    Config,
};

const char* to_string(ErrorKind kind) noexcept;

class AuditError : public std::runtime_error {
public:
    AuditError(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw AuditError(kind, what);
}

} // namespace inboxaudit
