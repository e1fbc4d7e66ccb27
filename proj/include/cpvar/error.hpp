// Error types shared by all cpvar modules.
#pragma once

#include <stdexcept>
#include <string>

namespace cpvar {

// Exit-status classes used by the command-line front end.
enum class ErrorCode : int {
  bad_argument = 2,
  format = 3,
  risk_set = 4,
  study_precondition = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::bad_argument, what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what)
      : Error(ErrorCode::format, what) {}
};

// K-hat (or the adjusted risk set) hit zero where the estimator needs it.
struct RiskSetError : Error {
  explicit RiskSetError(const std::string& what)
      : Error(ErrorCode::risk_set, what) {}
};

struct StudyError : Error {
  explicit StudyError(const std::string& what)
      : Error(ErrorCode::study_precondition, what) {}
};

}  // namespace cpvar
