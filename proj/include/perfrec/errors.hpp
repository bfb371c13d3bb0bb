#pragma once

#include <stdexcept>
#include <string>

namespace perfrec {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed user input (graph text, config, CSV). Maps to CLI exit code 2.
class InputError : public Error {
public:
    explicit InputError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// No noise value reproduces the observation.
class InfeasibleObservation : public Error {
public:
    InfeasibleObservation() : Error("infeasible observation") {}
};

}  // namespace perfrec
