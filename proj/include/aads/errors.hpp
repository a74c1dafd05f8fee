#pragma once

#include <stdexcept>
#include <string>

namespace aads {

/// Malformed input file or configuration. Maps to exit code 2.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A solver failed to reach its tolerance or a problem was numerically degenerate. Exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace aads
