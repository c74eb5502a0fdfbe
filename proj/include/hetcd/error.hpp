#pragma once

#include <stdexcept>
#include <string>

namespace hetcd {

// Base error for everything raised by the library. The CLI maps these to
// stderr messages and a nonzero exit code, naming the failing stage.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace hetcd
