#pragma once

#include <stdexcept>
#include <string>

namespace scene {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape/axis mismatches between tensors or against an op's contract.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid argument values: out-of-range config fields, non-finite data.
class ValueError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Corrupt serialized data: bad magic, truncation, CRC mismatch.
class IntegrityError : public Error {
public:
    using Error::Error;
};

// External encoder problems: missing binary, nonzero exit, timeout.
class EncoderError : public Error {
public:
    using Error::Error;
};

}  // namespace scene
