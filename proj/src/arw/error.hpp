#pragma once

#include <stdexcept>
#include <string>

namespace arw {

enum class Errc {
  invalid_argument,
  illegal_toppling,
  empty_toppling,
  empty_sample,
  conservation_violation,
  io_error,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace arw
