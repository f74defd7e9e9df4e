#include "bundler/error.hpp"

namespace bundler {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::kNoTokens: return "NoTokens";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kClassTooSmall: return "ClassTooSmall";
    case ErrorCode::kMatrixTooSmall: return "MatrixTooSmall";
    case ErrorCode::kBadK: return "BadK";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kInvariant: return "InvariantViolation";
  }
  return "UnknownError";
}

void ensure(bool condition, const std::string& what) {
  if (!condition) throw Error(ErrorCode::kInvariant, what);
}

}  // namespace bundler
