#pragma once

#include <stdexcept>
#include <string>

namespace alpeval {

/// Bad arguments, malformed content, violated invariants. CLI exit code 4.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem and stream failures. CLI exit code 3.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace alpeval
