#pragma once

#include <stdexcept>
#include <string>

namespace socialtrack {

// Base of every error raised by the library. Callers that only care about
// "something failed" catch this; the tracker catches the specific filter and
// fallback errors it knows how to recover from.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SOCIALTRACK_DEFINE_ERROR(Name)          \
  class Name : public Error {                   \
   public:                                      \
    using Error::Error;                         \
  }

SOCIALTRACK_DEFINE_ERROR(CovarianceNotPSD);
SOCIALTRACK_DEFINE_ERROR(SingularInnovation);
SOCIALTRACK_DEFINE_ERROR(FrameOrderError);
SOCIALTRACK_DEFINE_ERROR(ZeroVelocity);
SOCIALTRACK_DEFINE_ERROR(MissingHistory);
SOCIALTRACK_DEFINE_ERROR(WindowTooShort);
SOCIALTRACK_DEFINE_ERROR(DivergedLoss);
SOCIALTRACK_DEFINE_ERROR(ZeroGT);
SOCIALTRACK_DEFINE_ERROR(NoMatches);
SOCIALTRACK_DEFINE_ERROR(ConfigError);
SOCIALTRACK_DEFINE_ERROR(IoError);

#undef SOCIALTRACK_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace socialtrack
