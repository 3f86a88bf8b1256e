#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace snfit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (row and column are part of the message).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The data cannot identify the requested model.
class EstimabilityError : public Error {
public:
    using Error::Error;
};

/// A parameter transformation overflowed; the point is in a limiting-model region.
class LimitRegionError : public Error {
public:
    LimitRegionError(std::string coordinate, const std::string& what)
        : Error(what), coordinate_(std::move(coordinate)) {}

    const std::string& coordinate() const noexcept { return coordinate_; }

private:
    std::string coordinate_;
};

/// Root finding failed (e.g. a stress at or beyond an asymptote).
class NoSolutionError : public Error {
public:
    using Error::Error;
};

}  // namespace snfit
