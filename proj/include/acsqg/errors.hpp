#pragma once

#include <stdexcept>
#include <string>

namespace acsqg {

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct AnnotationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A pipeline stage was asked to run before its inputs exist.
struct DependencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace acsqg
