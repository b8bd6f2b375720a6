#pragma once

#include <stdexcept>
#include <string>

namespace fairprep {

// Base of every error thrown by the library. The CLI maps the three
// subclasses onto its exit codes (usage 1, data 2, numerical 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

// Malformed inputs: bad CSV, schema mismatch, unknown column, empty cell group.
class DataError : public Error {
public:
    using Error::Error;
};

// Divergence or singular systems.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, int epoch = -1)
        : Error(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace fairprep
