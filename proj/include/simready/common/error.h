#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace simready {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: names the offending field.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Well-formed input that violates one or more invariants. Carries every
// failure, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> failures)
      : Error(join(failures)), failures_(std::move(failures)) {}
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  static std::string join(const std::vector<std::string>& failures) {
    std::string out = "validation failed";
    for (const auto& f : failures) out += "; " + f;
    return out;
  }
  std::vector<std::string> failures_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class InvertedElementError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class OutOfDomainError : public Error {
 public:
  explicit OutOfDomainError(std::size_t particle)
      : Error("particle " + std::to_string(particle) +
              " is outside the grid domain"),
        particle_(particle) {}
  std::size_t particle() const { return particle_; }

 private:
  std::size_t particle_;
};

// State-machine or precondition conflicts (HTTP 409 in the service).
class ConflictError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace simready
