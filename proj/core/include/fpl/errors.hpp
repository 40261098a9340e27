#pragma once

#include <stdexcept>
#include <string>

namespace fpl {

// Failure categories surfaced by the library. CLI maps ConfigError/ParseError
// to exit code 2 and every numeric category to exit code 3.
enum class Errc {
  NonPositiveSize,
  NegativeMass,
  DuplicateKey,
  DivergentAtX,
  PreGelTime,
  ZeroFirstMoment,
  EmptySpectrum,
  OutOfRange,
  OutOfDomain,
  NegativeMassDetected,
  ControlSingularity,
  StepSizeTooCoarse,
  InvalidWindow,
  EmptyAfterRounding,
  EmptyWindow,
  InsufficientEvents,
  ParseError,
  IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace fpl
