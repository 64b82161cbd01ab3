#pragma once

#include <stdexcept>
#include <string>

namespace pgo {

enum class ErrorKind {
  MalformedRecord,
  EmptyInput,
  NoColdStartData,
  UnknownFormat,
  ParseError,
  StaleSource,
  VerificationFailure,
  EmptyStream,
  Config,
  Io,
};

const char* to_string(ErrorKind kind);

/// Error raised by every pgo module. The kind maps onto the CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pgo
