#ifndef FEDSIM_ERROR_HPP
#define FEDSIM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace fedsim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Vectors of different lengths met in one operation.
struct DimensionError : Error {
    using Error::Error;
};

// An operation precondition was violated (bad range, empty input, ...).
struct InvalidArgument : Error {
    using Error::Error;
};

// Krum cannot run because n - f - 2 < 1. Kept separate so the CLI can map it
// to its own exit code instead of a generic execution failure.
struct KrumPreconditionError : Error {
    using Error::Error;
};

// CSV loader failure. One kind per failure class so callers can branch on it.
struct CsvError : Error {
    enum class Kind {
        MissingFile,
        RaggedRow,
        NonNumeric,
        LabelOutOfRange,
        FeatureOutOfRange,
        Empty,
    };

    CsvError(Kind k, const std::string& what) : Error(what), kind(k) {}

    Kind kind;
};

// Configuration file problem (syntax or semantic validation).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace fedsim

#endif
