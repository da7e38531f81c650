#ifndef DNSREFL_ERRORS_HPP
#define DNSREFL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dnsrefl {

/// Base class for every error this library raises on bad input or bad data.
/// Programming errors (contract violations inside the library) use assertions
/// instead.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// capture ingest
struct BadMagic : Error {
    using Error::Error;
};
struct TruncatedFile : Error {
    using Error::Error;
};

// DNS decoding
struct MalformedMessage : Error {
    using Error::Error;
};

// feature matrices
struct NonFiniteInput : Error {
    using Error::Error;
};
struct SchemaError : Error {
    using Error::Error;
};

// SVM
struct DimensionMismatch : Error {
    using Error::Error;
};
struct SingleClass : Error {
    using Error::Error;
};
struct TooFewSamples : Error {
    using Error::Error;
};
struct VersionMismatch : Error {
    using Error::Error;
};

// evaluation
struct EmptyClass : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};

// generic I/O
struct IoError : Error {
    using Error::Error;
};

} // namespace dnsrefl

#endif
