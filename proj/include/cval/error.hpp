#pragma once

#include <stdexcept>
#include <string>

namespace cval {

// Machine-readable category for domain errors; the CLI maps these to
// error JSON on stderr and exit code 1.
enum class ErrorCode {
  invalid_data,
  mismatched_objects,
  constant_variable,
  part_too_small,
  unsupported_mode,
  schema_mismatch,
  invalid_k,
  insufficient_dissimilarity,
  rule_mode_mismatch,
  undefined_index,
  undefined_test,
  meaningless_combination,
  seal_violation,
  no_method,
  replicate_failed,
  io_error,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace cval
