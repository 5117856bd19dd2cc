#pragma once

#include <stdexcept>
#include <string>

namespace metacot {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data that violates a schema or an invariant (corpus, bank, config).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Manifests that cannot be analyzed together.
class InconsistencyError : public Error {
public:
    using Error::Error;
};

} // namespace metacot
