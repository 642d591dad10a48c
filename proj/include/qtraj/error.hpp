// error.hpp - exception types shared by all qtraj modules

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qtraj {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes that do not fit together (non-square, mismatched d, wrong d²).
class DimensionError : public Error {
public:
    using Error::Error;
};

// Eigenvector matrix too ill-conditioned to trust a spectral computation.
class NearDefectiveError : public Error {
public:
    NearDefectiveError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

// Projection onto the state cone removed (almost) all of the trace.
class DegenerateStateError : public Error {
public:
    using Error::Error;
};

// A named structural invariant failed (Hermiticity, trace condition,
// complete positivity, decomposition sum, Kraus completeness, ...).
class InvariantError : public Error {
public:
    InvariantError(std::string invariant, const std::string& detail)
        : Error(invariant + ": " + detail), invariant_(std::move(invariant)) {}
    const std::string& invariant() const noexcept { return invariant_; }

private:
    std::string invariant_;
};

// Survival function left [0,1] or was not monotone.
class DecompositionInvalidError : public Error {
public:
    using Error::Error;
};

// Jump requested from a state with zero total jump rate.
class DarkStateError : public Error {
public:
    using Error::Error;
};

// Jump map annihilates the state (tr J(rho) ~ 0).
class ForbiddenJumpError : public Error {
public:
    using Error::Error;
};

// Click count exceeded the configured cap.
class AccumulationError : public Error {
public:
    using Error::Error;
};

// Euler-Maruyama iterate left the state cone by more than the guard allows.
class GuardAbort : public Error {
public:
    GuardAbort(const std::string& what, std::int64_t step)
        : Error(what), step_(step) {}
    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace qtraj
