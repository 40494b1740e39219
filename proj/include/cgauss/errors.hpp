#pragma once

#include <stdexcept>

namespace cgauss {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A diagonal-plus-constant matrix was given a zero, negative, NaN or
// infinite entry.
class NonPositiveEntry : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// A weight vector contains a zero coordinate.
class ZeroWeight : public Error {
public:
    using Error::Error;
};

class BadPivot : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

// A rejection run accepted too few proposals to estimate moments.
class TooFewAccepted : public Error {
public:
    using Error::Error;
};

class InsufficientSamples : public Error {
public:
    using Error::Error;
};

}  // namespace cgauss
