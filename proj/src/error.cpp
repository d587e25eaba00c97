#include "inboxaudit/error.hpp"

namespace inboxaudit {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Range: return "range error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Integrity: return "integrity error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Undefined: return "undefined";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Transport: return "transport error";
    case ErrorKind::Protocol: return "protocol error";
    case ErrorKind::Config: return "config error";
    }
    return "error";
}

} // namespace inboxaudit
