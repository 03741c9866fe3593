#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tactwin {

enum class Errc {
  InvalidArgument,
  // wiretab
  AmplitudeOverflow,
  AmplitudeOutOfRange,
  FrequencyOutOfRange,
  LengthMismatch,
  // interconnect
  NoSuchAddress,
  DuplicateDip,
  NoSelection,
  Nack,
  Timeout,
  DegenerateFit,
  // siggen
  IllegalTransition,
  WrongState,
  NotRunning,
  // analog
  NonPositiveInput,
  UnstableFilter,
  // metrology / fitting
  NoConvergence,
  BandAboveNyquist,
  // actuator
  SingularBoundary,
  InsufficientData,
  EmptyInput,
  // host
  EmptyBus,
  NonPositiveCalibration,
  // scene runner
  ParseError,
  DuplicateId,
  OverlapError,
  ModelOutputInvalid,
  MissingCaptures,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Exception type used across the library. The code identifies the failure
/// class, the message carries context for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tactwin
