#pragma once

#include <stdexcept>
#include <string>

namespace drumcoach {

/// Failure categories surfaced by the engine. The CLI maps every kind to exit code 1.
enum class ErrorKind {
    Parse,
    Schema,
    Invariant,
    Io,
    Range,
    Config,
    DegenerateSpine,
    DegenerateFacing,
    BandInfeasible,
    EmptyInput,
    OutOfOrderFrame,
    IncompleteAttempt,
    LockedChallenge,
    UnknownChallenge,
    EmptyCategory,
    FrameTooLarge,
    MalformedLine,
    Bind,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Invariant: return "InvariantError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Range: return "RangeError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::DegenerateSpine: return "DegenerateSpine";
    case ErrorKind::DegenerateFacing: return "DegenerateFacing";
    case ErrorKind::BandInfeasible: return "BandInfeasible";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::OutOfOrderFrame: return "OutOfOrderFrame";
    case ErrorKind::IncompleteAttempt: return "IncompleteAttempt";
    case ErrorKind::LockedChallenge: return "LockedChallengeError";
    case ErrorKind::UnknownChallenge: return "UnknownChallenge";
    case ErrorKind::EmptyCategory: return "EmptyCategory";
    case ErrorKind::FrameTooLarge: return "FrameTooLarge";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::Bind: return "BindError";
    }
    return "Error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Error tied to a 1-based line of an NDJSON file.
class LineError : public Error {
public:
    LineError(ErrorKind kind, std::size_t line, const std::string& detail)
        : Error(kind, "line " + std::to_string(line) + ": " + detail), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace drumcoach
