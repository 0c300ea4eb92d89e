#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bellows {

// Single exception type for the whole library.  `code` is a stable
// machine-readable identifier (snake_case); `what()` prepends it to the
// human-readable message.  The CLI maps any escaped Error to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, const std::string& code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace bellows
