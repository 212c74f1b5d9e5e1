#pragma once

#include <stdexcept>
#include <string>

namespace hierfed {

// Tensor dimensions disagree with what a layer expects.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two parameter sets do not share layer names / order.
struct StructureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input outside an operation's domain (empty sequence, empty group...).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files or rows.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration, strategy names, presets. Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient. Maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hierfed
