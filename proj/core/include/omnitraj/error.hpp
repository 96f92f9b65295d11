#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace omnitraj {

/// Base class for every error raised by the library. `code()` is a short
/// machine-parseable tag ("parameter", "shape", ...) used by the CLI and the
/// query service when reporting failures.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& m) : Error("parameter", m) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};

class VocabularyError : public Error {
 public:
  explicit VocabularyError(const std::string& m) : Error("vocabulary", m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& m) : Error("data", m) {}
};

class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& m) : Error("generation", m) {}
};

class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& m) : Error("degenerate", m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error("io", m) {}
};

// Throws ParameterError with `message` unless `condition` holds.
void require(bool condition, std::string_view message);

}  // namespace omnitraj
