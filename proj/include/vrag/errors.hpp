#pragma once

#include <stdexcept>
#include <string>

namespace vrag {

/// Base class for all engine errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file (manifest, script, cache, config). Carries line context
/// in the message where available.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Identifier that should resolve (gt_doc_id, haystack name) does not.
class ReferentialError : public Error {
public:
    using Error::Error;
};

class DuplicateIdError : public Error {
public:
    using Error::Error;
};

/// Service unreachable, timed out, or the connection failed.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Service responded, but not in the agreed wire format (bad JSON shape,
/// wrong embedding dimension, missing fields).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Mathematically invalid input (zero-norm vector, mismatched lengths).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Pipeline stage failure; message is prefixed with the stage name.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& msg)
        : Error(stage + ": " + msg), stage_(stage) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

} // namespace vrag
