#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace daepencil {

enum class ErrorKind {
    ShapeMismatch,
    NonFinite,
    NotRegular,
    DegreeOverflow,
    IndexTooHigh,
    DecompositionInconsistent,
    SingularBlock,
    SyntaxError,
    UnknownIdentifier,
    ArityError,
    EvalDomainError,
    PhiSingular,
    NoConvergence,
    InconsistentStart,
    MissingFreeComponent,
    FitFailed,
    NonpositiveU,
    InvalidSpec,
    ResourceError,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::NotRegular: return "NotRegular";
        case ErrorKind::DegreeOverflow: return "DegreeOverflow";
        case ErrorKind::IndexTooHigh: return "IndexTooHigh";
        case ErrorKind::DecompositionInconsistent: return "DecompositionInconsistent";
        case ErrorKind::SingularBlock: return "SingularBlock";
        case ErrorKind::SyntaxError: return "SyntaxError";
        case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
        case ErrorKind::ArityError: return "ArityError";
        case ErrorKind::EvalDomainError: return "EvalDomainError";
        case ErrorKind::PhiSingular: return "PhiSingular";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::InconsistentStart: return "InconsistentStart";
        case ErrorKind::MissingFreeComponent: return "MissingFreeComponent";
        case ErrorKind::FitFailed: return "FitFailed";
        case ErrorKind::NonpositiveU: return "NonpositiveU";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::ResourceError: return "ResourceError";
    }
    return "Unknown";
}

/// Single exception type for the library; `kind()` tells callers what failed.
class Error : public std::runtime_error {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    Error(ErrorKind kind, const std::string& what, std::size_t offset = npos)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), offset_(offset) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Byte offset into the parsed text, or npos when not applicable.
    std::size_t offset() const noexcept { return offset_; }

private:
    ErrorKind kind_;
    std::size_t offset_;
};

} // namespace daepencil
