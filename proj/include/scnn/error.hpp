#pragma once

#include <stdexcept>
#include <string>

namespace scnn {

// Root of every failure the library reports. Subclasses let callers (and the
// CLI) tell the categories apart without parsing messages.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class DegenerateInput : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class IdxError : public Error {
public:
    enum class Kind { io, bad_magic, truncated, count_mismatch };

    IdxError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

} // namespace scnn
