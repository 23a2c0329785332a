#pragma once

#include <stdexcept>
#include <string>

namespace gdq {

/// Violated precondition or shape contract of a library call.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// File could not be read, written or decoded.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model container failed validation. No partial model is ever returned.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gdq
