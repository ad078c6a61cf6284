#pragma once

#include <stdexcept>
#include <string>

namespace depthstyle {

// Every failure surfaced by the library carries one of these categories.
// The CLI prints them as a machine-parsable `error:<Category>: message`
// line, so the names are part of the tool's interface.
enum class ErrorCategory {
  FileNotFound,
  UnsupportedFormat,
  CorruptFile,
  IoError,
  BackendUnavailable,
  BackendFailure,
  ShapeMismatch,
  DimensionMismatch,
  UnknownLayer,
  LayerMismatch,
  ChannelMismatch,
  MalformedConfig,
  UnknownKey,
  OutOfRange,
  InvalidArgument,
  Internal,
};

const char* to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

  // The single-line form used by the CLI: "error:<Category>: message".
  std::string formatted() const;

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void raise(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace depthstyle
