#pragma once

#include <stdexcept>
#include <string>

namespace vqm {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad inputs: malformed files, violated invariants, out-of-range arguments.
// The CLI maps these to exit code 2.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Failures while running on valid inputs (I/O mid-stream, solver trouble).
// The CLI maps these to exit code 3.
class RuntimeFailure : public Error {
public:
    explicit RuntimeFailure(const std::string& msg) : Error(msg) {}
};

// Rank-deficient or near-constant sample set handed to a distribution fit.
class DegenerateFitError : public RuntimeFailure {
public:
    explicit DegenerateFitError(const std::string& msg) : RuntimeFailure(msg) {}
};

} // namespace vqm
