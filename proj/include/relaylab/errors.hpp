#pragma once

#include <stdexcept>
#include <string>

namespace relaylab {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A referenced variable name does not exist in the distribution.
struct NameError : Error {
    using Error::Error;
};

// A factor chain is cyclic / references a variable not produced yet,
// or a variable name is defined twice.
struct StructureError : Error {
    using Error::Error;
};

// Alphabet sizes disagree between objects that must match.
struct ShapeError : Error {
    using Error::Error;
};

// Bad argument value (overlapping variable sets, out-of-range symbol, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// A dense object would exceed the supported size guards.
struct SizeError : Error {
    using Error::Error;
};

// Malformed input document.
struct ParseError : Error {
    using Error::Error;
};

// Well-formed input with invalid numerical content.
struct ValidationError : Error {
    using Error::Error;
};

// Fixed-point iteration exhausted its budget; carries the last residual.
struct ConvergenceError : Error {
    double residual;
    ConvergenceError(const std::string& msg, double r) : Error(msg), residual(r) {}
};

// Codebook construction failed (empty typical set / rejection cap).
struct ConstructionError : Error {
    using Error::Error;
};

// The auxiliary-variable repair could not reach a strictly feasible point.
struct RepairError : Error {
    using Error::Error;
};

}  // namespace relaylab
