#ifndef MALGRID_ERRORS_HPP
#define MALGRID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace malgrid {

// Malformed or inconsistent input data (corpus layout, image contents,
// shape mismatches surfaced to the user). CLI exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem / stream failures. CLI exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model file problems, one subclass per failure mode so callers can
// distinguish them.
struct ModelFileError : DataError {
    using DataError::DataError;
};

struct BadMagicError : ModelFileError {
    using ModelFileError::ModelFileError;
};

struct UnsupportedVersionError : ModelFileError {
    using ModelFileError::ModelFileError;
};

struct TruncatedFileError : ModelFileError {
    using ModelFileError::ModelFileError;
};

struct ChecksumError : ModelFileError {
    using ModelFileError::ModelFileError;
};

}  // namespace malgrid

#endif
