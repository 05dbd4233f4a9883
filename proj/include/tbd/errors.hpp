#pragma once

#include <stdexcept>
#include <string>

namespace tbd {

/// Base of every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Particle set whose total weight is zero or not finite.
struct DegenerateSetError : Error {
    using Error::Error;
};

/// Argument outside the domain of a density.
struct DomainError : Error {
    using Error::Error;
};

/// Problem instance too large for an exhaustive routine.
struct SizeError : Error {
    using Error::Error;
};

/// Ragged or otherwise malformed tabular input.
struct ShapeError : Error {
    using Error::Error;
};

/// Invalid or unknown configuration entry.
struct ConfigError : Error {
    using Error::Error;
};

/// File system failure, carries the offending path in its message.
struct IoError : Error {
    using Error::Error;
};

}  // namespace tbd
