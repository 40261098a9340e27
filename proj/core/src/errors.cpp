#include "fpl/errors.hpp"

namespace fpl {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NonPositiveSize: return "NonPositiveSize";
    case Errc::NegativeMass: return "NegativeMass";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::DivergentAtX: return "DivergentAtX";
    case Errc::PreGelTime: return "PreGelTime";
    case Errc::ZeroFirstMoment: return "ZeroFirstMoment";
    case Errc::EmptySpectrum: return "EmptySpectrum";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::NegativeMassDetected: return "NegativeMassDetected";
    case Errc::ControlSingularity: return "ControlSingularity";
    case Errc::StepSizeTooCoarse: return "StepSizeTooCoarse";
    case Errc::InvalidWindow: return "InvalidWindow";
    case Errc::EmptyAfterRounding: return "EmptyAfterRounding";
    case Errc::EmptyWindow: return "EmptyWindow";
    case Errc::InsufficientEvents: return "InsufficientEvents";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace fpl
