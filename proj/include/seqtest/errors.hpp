#pragma once

#include <stdexcept>
#include <string>

namespace seqtest {

// Mismatched lengths between states, beliefs or vectors.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A value violates a domain invariant (negative weight, p outside [0,1], ...).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed scenario or experiment text.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke a precondition (empty alpha set, bad action, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Observation has zero probability under the current belief.
class InconsistentObservation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Problem too large for the requested solver.
class SizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A branch belief lies outside the convex hull of the interpolation grid.
class CoverageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace seqtest
