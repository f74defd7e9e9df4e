#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bundler {

enum class ErrorCode {
  kEmptyCorpus,
  kMalformedRecord,
  kDuplicateId,
  kEmptyVocabulary,
  kNoTokens,
  kIndexOutOfRange,
  kEmptyText,
  kClassTooSmall,
  kMatrixTooSmall,
  kBadK,
  kIo,
  kConfig,
  kInvariant,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  // Same code, message prefixed with `context`.
  Error with_context(const std::string& context) const {
    return Error(code_, context + ": " + detail_);
  }

 private:
  ErrorCode code_;
  std::string detail_;
};

// Throws kInvariant when `condition` is false.
void ensure(bool condition, const std::string& what);

}  // namespace bundler
