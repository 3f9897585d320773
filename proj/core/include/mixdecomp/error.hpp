#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mixdecomp {

enum class Errc {
  NotStochastic,
  ReducibleKernel,
  DimensionMismatch,
  InvalidAlpha,
  NotReversible,
  UnreachableTarget,
  InvalidPartition,
  SingularReturn,
  AbsorbingBlock,
  NoExit,
  TooManyBlocks,
  PreconditionViolated,
  DriftViolated,
  MTooSmall,
  ContractionTooWeak,
  EpsilonTooLarge,
  DisconnectedGc,
  NotTreeWalk,
  InvalidMetric,
  InvalidParameter,
  GraphGenerationFailed,
  StateSpaceTooLarge,
  ProductSpaceTooLarge,
  HorizonOverflow,
  ParseError,
  IoError,
  ConfigInvalid,
  AssertionFailed,
  InvalidComparison,
  SuiteFailed,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace mixdecomp
