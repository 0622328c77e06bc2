#pragma once

#include <stdexcept>
#include <string>

namespace suc {

// Malformed textual or binary input (notation strings, catalog files, blobs).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Structurally valid input that violates a documented precondition.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem or socket failure.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A peer broke the session contract (bad frame, bad state, failed auth).
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace suc
