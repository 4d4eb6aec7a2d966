#pragma once
#include <stdexcept>
#include <string>

namespace btx {

// Single exception type carrying a short machine-readable code
// (e.g. "DuplicateBranchPoint", "HankelBreakdown") plus a human message.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, const std::string& code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

} // namespace btx
