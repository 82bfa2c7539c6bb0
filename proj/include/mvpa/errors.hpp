#pragma once

#include <stdexcept>
#include <string>

namespace mvpa {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// File could not be opened, read or written.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// File exists but its contents violate the expected format
// (bad CSV row, manifest/dimension mismatch, duplicate ids, ...).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// A caller handed us arguments that violate a documented precondition.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

// Input is syntactically fine but numerically unusable
// (constant vector where variation is required, single-class labels, ...).
class DegenerateInput : public Error {
public:
    explicit DegenerateInput(const std::string& msg) : Error(msg) {}
};

// Experiment configuration fails validation.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace mvpa
