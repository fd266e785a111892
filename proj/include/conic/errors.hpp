#pragma once

#include <stdexcept>
#include <string>

namespace conic {

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Input data that cannot support the requested computation (n < 2,
/// zero variances where a positive one is required, ...).
class DegenerateInputError : public Error
{
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
    using Error::Error;
};

/// A cone kind that needs extra data (the ellipsoid for the lasso cone)
/// was used without it.
class MissingParameterError : public Error
{
public:
    using Error::Error;
};

class UnsupportedOperationError : public Error
{
public:
    using Error::Error;
};

/// The exhaustive solver would have to enumerate more supports than allowed.
class BudgetExceededError : public Error
{
public:
    using Error::Error;
};

/// An iterative solver did not reach its tolerance.
class ConvergenceError : public Error
{
public:
    using Error::Error;
};

/// Malformed text input. Carries the 1-based location when known.
class ParseError : public Error
{
public:
    ParseError(const std::string& what, long row = -1, long column = -1)
        : Error(what), row_(row), column_(column)
    {
    }

    long row() const noexcept { return row_; }
    long column() const noexcept { return column_; }

private:
    long row_;
    long column_;
};

}  // namespace conic
