#pragma once

#include <stdexcept>
#include <string>

namespace rumcg {

// Base class for all library errors so callers can catch the family at once.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Two periods have proportional price vectors; no strict expenditure
// partition exists between them and the analysis degenerates.
class DegenerateBudgets : public Error {
public:
    using Error::Error;
};

// A period admits no patch at the requested separation margin.
class InfeasibleMargin : public Error {
public:
    using Error::Error;
};

// An observed bundle sits on (or within tolerance of) a budget-comparison
// boundary, so its patch is ambiguous.
class OnBoundary : public Error {
public:
    using Error::Error;
};

// A bundle's sign vector does not match any enumerated patch.
class UnknownPatch : public Error {
public:
    using Error::Error;
};

// An enumeration would exceed the caller-supplied limit.
class TooLarge : public Error {
public:
    using Error::Error;
};

// A sampling budget was spent without producing the requested output.
class Exhausted : public Error {
public:
    using Error::Error;
};

// Linear algebra failed (singular normal equations, iteration overflow).
class NumericalFailure : public Error {
public:
    using Error::Error;
};

// A caller violated a documented precondition.
class ContractViolation : public Error {
public:
    using Error::Error;
};

// Malformed input files or inconsistent dimensions.
class InputError : public Error {
public:
    using Error::Error;
};

}  // namespace rumcg
