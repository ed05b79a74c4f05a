#ifndef DFSYNC_ERROR_HPP
#define DFSYNC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dfsync {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter inequality (ν<β, τ<R, order preservation, R_τ>0, ν_τ<β, ...) is violated.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (root bracket lost, Newton divergence, residual too large).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The activator history does not cover a requested time.
class HistoryUnderflow : public Error {
public:
    using Error::Error;
};

/// Backward reconstruction produced a negative activator value.
class NegativeActivator : public Error {
public:
    using Error::Error;
};

/// Initial data is neither certified by the finite-dimensional admissibility
/// conditions nor accompanied by an explicit activator history.
class WellPosednessError : public Error {
public:
    using Error::Error;
};

/// The cyclic firing order assumed by a return or firing map was broken.
class OrderViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace dfsync

#endif  // DFSYNC_ERROR_HPP
