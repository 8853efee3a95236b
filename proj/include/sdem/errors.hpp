#pragma once

#include <stdexcept>
#include <string>

namespace sdem {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flag combinations, unsupported model/loss pairings, refused diagnostics.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input files. Carries the offending line when known.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Word id outside a closed vocabulary.
class VocabularyError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Raised by m_step on a state outside the feasible region.
class FeasibilityError : public NumericError {
 public:
  FeasibilityError(const std::string& what, std::size_t component)
      : NumericError(what), component_(component) {}
  std::size_t component() const { return component_; }

 private:
  std::size_t component_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdem
