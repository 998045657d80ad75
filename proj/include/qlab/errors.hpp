#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qlab {

/// Base for every domain error raised by the library. The CLI maps these to
/// exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class ZeroClass : public Error {
public:
    ZeroClass() : Error("operation requires a nonzero class") {}
};

class NotOrthogonal : public Error {
public:
    NotOrthogonal(double q, double sum)
        : Error("effects are not orthogonal: f+g = " + std::to_string(sum) + " at q = " + std::to_string(q)),
          point_(q), sum_(sum) {}

    double point() const noexcept { return point_; }
    double sum() const noexcept { return sum_; }

private:
    double point_;
    double sum_;
};

class CannotCertify : public Error {
public:
    using Error::Error;
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
};

}  // namespace qlab
