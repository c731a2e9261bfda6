#pragma once

#include <stdexcept>
#include <string>

namespace b3seg {

// Bad field values (range/NaN/shape); message names the field and index.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file content; message carries the byte offset where parsing failed.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Synthetic-scene placement could not satisfy the separation constraint.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No Gaussian has a > b; callers fall back to the scene bounding sphere.
struct NoForegroundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace b3seg
