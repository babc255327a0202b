#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace persona_eval {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input and validation errors (CLI exit code 1).

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& detail)
      : Error("parse error at line " + std::to_string(line) + ": " + detail), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string id, const std::string& reason)
      : Error("invalid record '" + id + "': " + reason), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(std::string id) : Error("duplicate dialogue id '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class InvalidFraction : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ZeroVector : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class EmptyDenominator : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class ZeroVariance : public Error {
 public:
  using Error::Error;
};

class UnknownLabel : public Error {
 public:
  using Error::Error;
};

class MissingSourceText : public Error {
 public:
  using Error::Error;
};

class TooFewDialogues : public Error {
 public:
  using Error::Error;
};

class SampleTooLarge : public Error {
 public:
  using Error::Error;
};

class UnknownSession : public Error {
 public:
  using Error::Error;
};

class UnknownTask : public Error {
 public:
  using Error::Error;
};

class InvalidPairing : public Error {
 public:
  using Error::Error;
};

class NoDecisions : public Error {
 public:
  using Error::Error;
};

// Backend errors (CLI exit code 2), except EmptyText which is an input error
// surfaced by backends.

class BackendError : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};

class BadResponse : public BackendError {
 public:
  using BackendError::BackendError;
};

class UnsupportedLanguagePair : public BackendError {
 public:
  using BackendError::BackendError;
};

class EmptyText : public Error {
 public:
  using Error::Error;
};

}  // namespace persona_eval
