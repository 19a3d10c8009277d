#pragma once

#include <stdexcept>
#include <string>

namespace jitcal {

// Input file/stream violates the expected column layout.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A cell or line could not be parsed; message carries the row number.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parsed fine but the value is outside its legal domain.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation has no defined value on this input (empty set, single class).
struct UndefinedInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Optimizer cannot produce a meaningful fit (e.g. one-class fold).
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Statistical routine received a sample it cannot handle.
struct DegenerateSampleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sample outside the size range a test is specified for.
struct ApplicabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Measurement tables do not share the structure needed for pairing.
struct ComparisonError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace jitcal
