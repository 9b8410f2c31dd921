#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace odefit {

// Vector or matrix sizes disagree with what the receiving object expects.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Requested object would be too large to represent (basis cardinality).
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

// A trajectory left the finite floating-point range.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

// Rejection sampling could not find an accepted point within the budget.
class RejectionError : public std::runtime_error {
public:
    RejectionError(const std::string& what, std::size_t attempts)
        : std::runtime_error(what + " after " + std::to_string(attempts) + " attempts"),
          attempts_(attempts) {}
    std::size_t attempts() const noexcept { return attempts_; }

private:
    std::size_t attempts_;
};

// Malformed input file; line is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double gap)
        : std::runtime_error(what + " (objective gap estimate " + std::to_string(gap) + ")"),
          gap_(gap) {}
    double gap() const noexcept { return gap_; }

private:
    double gap_;
};

// Wraps a failure inside one pipeline stage of an experiment run.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace odefit
