#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace citeassist {

enum class ErrorCode {
  MalformedPdf,
  EncryptedPdf,
  PageOutOfRange,
  RenderFailure,
  ServiceUnavailable,
  ServiceError,
  NotFound,
  MalformedDoi,
  MalformedArxivId,
  NoEntryFound,
  UnbalancedDelimiters,
  StorageFailure,
  IntegrityFailure,
  InvalidInput,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above; the
// CLI and HTTP layers map codes onto exit statuses and response bodies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// UnbalancedDelimiters with the byte offset where the parser gave up.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, std::size_t position)
      : Error(ErrorCode::UnbalancedDelimiters, message), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace citeassist
