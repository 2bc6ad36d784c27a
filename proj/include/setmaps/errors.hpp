#pragma once

#include <stdexcept>
#include <string>

namespace setmaps {

/// Invalid or inconsistent configuration / input data.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An operation's mathematical precondition does not hold.
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A configured resource cap (pattern count, window size) was exceeded.
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace setmaps
