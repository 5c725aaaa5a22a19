#pragma once

#include <stdexcept>
#include <string>

namespace mothscan {

// Base class for every error raised by the library. Callers that only care
// about "bad input vs. bug" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Image or data file could not be read or decoded.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mothscan
