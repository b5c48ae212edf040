#pragma once

#include <stdexcept>
#include <string>

namespace isophase {

enum class ErrorCode {
  kInvalidArgument = 1,
  kGridMismatch,
  kDivergence,
  kNonConvergence,
  kDegenerate,
  kNotStable,
  kPhaseUndefined,
  kNotAttracted,
  kBudget,
  kConfig,
  kIo,
  kInsufficientData,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace isophase
