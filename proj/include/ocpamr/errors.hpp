#pragma once

#include <stdexcept>
#include <string>

namespace ocpamr {

/// Invalid arguments or configuration supplied by the caller.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A mesh or matrix violated a structural consistency requirement.
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative or numerical process failed (non-convergence, non-finite values).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point lies outside the domain of the function being evaluated.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ocpamr
