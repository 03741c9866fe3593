#include "tactwin/error.hpp"

namespace tactwin {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::AmplitudeOverflow: return "AmplitudeOverflow";
    case Errc::AmplitudeOutOfRange: return "AmplitudeOutOfRange";
    case Errc::FrequencyOutOfRange: return "FrequencyOutOfRange";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NoSuchAddress: return "NoSuchAddress";
    case Errc::DuplicateDip: return "DuplicateDip";
    case Errc::NoSelection: return "NoSelection";
    case Errc::Nack: return "Nack";
    case Errc::Timeout: return "Timeout";
    case Errc::DegenerateFit: return "DegenerateFit";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::WrongState: return "WrongState";
    case Errc::NotRunning: return "NotRunning";
    case Errc::NonPositiveInput: return "NonPositiveInput";
    case Errc::UnstableFilter: return "UnstableFilter";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::BandAboveNyquist: return "BandAboveNyquist";
    case Errc::SingularBoundary: return "SingularBoundary";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::EmptyBus: return "EmptyBus";
    case Errc::NonPositiveCalibration: return "NonPositiveCalibration";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::OverlapError: return "OverlapError";
    case Errc::ModelOutputInvalid: return "ModelOutputInvalid";
    case Errc::MissingCaptures: return "MissingCaptures";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace tactwin
