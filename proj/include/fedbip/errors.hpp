#pragma once

#include <stdexcept>
#include <string>

namespace fedbip {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape violations: dimension mismatches, partition mismatches, bad indices.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Optimization failures: non-finite loss, divergence.
class TrainingError : public Error {
public:
    using Error::Error;
};

// Config-file schema violations. Messages name the offending field.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Filesystem and serialization failures.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace fedbip
