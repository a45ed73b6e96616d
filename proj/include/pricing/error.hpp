#pragma once

#include <stdexcept>
#include <string>

namespace pricing {

// Base for every recoverable error the toolkit raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class InvalidQuote : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class EmptySeries : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    FitError(const std::string& what, double best_loglik)
        : Error(what), best_loglik_(best_loglik) {}
    double best_loglik() const noexcept { return best_loglik_; }

private:
    double best_loglik_;
};

class NotFound : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class StorageError : public Error {
public:
    using Error::Error;
};

} // namespace pricing
