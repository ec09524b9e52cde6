#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ragmt {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or record. The message names the offending line.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Vector dimension or encoder identity does not match the index.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A network backend failed. Retriable unless `retriable()` is false.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool retriable = true)
      : Error(what), retriable_(retriable) {}
  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

/// A backend call exhausted its retries. Carries one line per attempt.
class RetriesExhausted : public Error {
 public:
  RetriesExhausted(const std::string& what, std::vector<std::string> attempts)
      : Error(what), attempts_(std::move(attempts)) {}
  const std::vector<std::string>& attempts() const noexcept { return attempts_; }

 private:
  std::vector<std::string> attempts_;
};

}  // namespace ragmt
