#include "mixdecomp/error.hpp"

namespace mixdecomp {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::NotStochastic: return "NotStochastic";
    case Errc::ReducibleKernel: return "ReducibleKernel";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidAlpha: return "InvalidAlpha";
    case Errc::NotReversible: return "NotReversible";
    case Errc::UnreachableTarget: return "UnreachableTarget";
    case Errc::InvalidPartition: return "InvalidPartition";
    case Errc::SingularReturn: return "SingularReturn";
    case Errc::AbsorbingBlock: return "AbsorbingBlock";
    case Errc::NoExit: return "NoExit";
    case Errc::TooManyBlocks: return "TooManyBlocks";
    case Errc::PreconditionViolated: return "PreconditionViolated";
    case Errc::DriftViolated: return "DriftViolated";
    case Errc::MTooSmall: return "MTooSmall";
    case Errc::ContractionTooWeak: return "ContractionTooWeak";
    case Errc::EpsilonTooLarge: return "EpsilonTooLarge";
    case Errc::DisconnectedGc: return "DisconnectedGc";
    case Errc::NotTreeWalk: return "NotTreeWalk";
    case Errc::InvalidMetric: return "InvalidMetric";
    case Errc::InvalidParameter: return "InvalidParameter";
    case Errc::GraphGenerationFailed: return "GraphGenerationFailed";
    case Errc::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case Errc::ProductSpaceTooLarge: return "ProductSpaceTooLarge";
    case Errc::HorizonOverflow: return "HorizonOverflow";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::AssertionFailed: return "AssertionFailed";
    case Errc::InvalidComparison: return "InvalidComparison";
    case Errc::SuiteFailed: return "SuiteFailed";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace mixdecomp
