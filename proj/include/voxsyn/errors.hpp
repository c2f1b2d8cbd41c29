#pragma once

#include <stdexcept>
#include <string>

namespace voxsyn {

// Data / numeric errors. The CLI maps these to exit code 1.
struct DegenerateDepth : std::runtime_error {
    explicit DegenerateDepth(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidRange : std::runtime_error {
    explicit InvalidRange(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyViewSet : std::runtime_error {
    explicit EmptyViewSet(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonFiniteGradient : std::runtime_error {
    explicit NonFiniteGradient(const std::string& msg) : std::runtime_error(msg) {}
};

struct TooSmall : std::runtime_error {
    explicit TooSmall(const std::string& msg) : std::runtime_error(msg) {}
};

// I/O errors.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingImage : std::runtime_error {
    explicit MissingImage(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidPose : std::runtime_error {
    explicit InvalidPose(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedFormat : std::runtime_error {
    explicit UnsupportedFormat(const std::string& msg) : std::runtime_error(msg) {}
};

struct CorruptHeader : std::runtime_error {
    explicit CorruptHeader(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace voxsyn
