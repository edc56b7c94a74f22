#pragma once

#include <stdexcept>
#include <string>

namespace kfhe {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid or inconsistent parameters (bad degree, missing primes, basis mismatch, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// A value outside its admissible numeric range (prime width > 32 bits, ...).
class RangeError : public Error {
public:
    using Error::Error;
};

// Operand is in the wrong representation (coefficient vs NTT).
class DomainError : public Error {
public:
    using Error::Error;
};

// Shapes, levels, scales or bases of two operands disagree.
class MismatchError : public Error {
public:
    using Error::Error;
};

// Level budget exhausted (rescale at level 0, circuit deeper than the chain).
class LevelError : public Error {
public:
    using Error::Error;
};

// Inner dimension too large for 32-bit accumulation of 8-bit products.
class OverflowRiskError : public Error {
public:
    using Error::Error;
};

// Heterogeneous batch members or kernel/operand incompatibility in a batch.
class BatchError : public Error {
public:
    using Error::Error;
};

// Memory budget cannot hold even a single operand.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Malformed serialized data.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace kfhe
