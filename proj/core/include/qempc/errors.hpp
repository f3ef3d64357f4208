#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qempc {

// Base of every error the library throws. Subclasses name the failure kind so
// callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed problem data: dimension mismatch, non-PD weights, bad config.
class InvalidProblem : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class EmptyController : public Error {
 public:
  using Error::Error;
};

class InvalidRegion : public Error {
 public:
  using Error::Error;
};

// The measured state lies in no critical region.
class InfeasibleState : public Error {
 public:
  using Error::Error;
};

class KeyLengthError : public Error {
 public:
  using Error::Error;
};

class KeyReuseError : public Error {
 public:
  using Error::Error;
};

class MagnitudeError : public Error {
 public:
  MagnitudeError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class CiphertextError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class PlaintextRange : public Error {
 public:
  using Error::Error;
};

class KeyMismatch : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class WireFormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qempc
