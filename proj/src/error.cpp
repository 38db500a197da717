#include "citeassist/error.hpp"

namespace citeassist {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedPdf: return "MALFORMED_PDF";
    case ErrorCode::EncryptedPdf: return "ENCRYPTED_PDF";
    case ErrorCode::PageOutOfRange: return "PAGE_OUT_OF_RANGE";
    case ErrorCode::RenderFailure: return "RENDER_FAILURE";
    case ErrorCode::ServiceUnavailable: return "SERVICE_UNAVAILABLE";
    case ErrorCode::ServiceError: return "SERVICE_ERROR";
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::MalformedDoi: return "MALFORMED_DOI";
    case ErrorCode::MalformedArxivId: return "MALFORMED_ARXIV_ID";
    case ErrorCode::NoEntryFound: return "NO_ENTRY_FOUND";
    case ErrorCode::UnbalancedDelimiters: return "UNBALANCED_DELIMITERS";
    case ErrorCode::StorageFailure: return "STORAGE_FAILURE";
    case ErrorCode::IntegrityFailure: return "INTEGRITY_FAILURE";
    case ErrorCode::InvalidInput: return "INVALID_INPUT";
  }
  return "UNKNOWN";
}

}  // namespace citeassist
