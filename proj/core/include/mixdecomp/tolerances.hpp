#pragma once

// Every numeric tolerance used by validation lives here so tests and
// reports can cite a single source.
namespace mixdecomp::tol {

inline constexpr double kStochasticity = 1e-9;
inline constexpr double kLinearResidual = 1e-8;
inline constexpr double kDetailedBalance = 1e-9;
inline constexpr double kEigen = 1e-10;
inline constexpr double kPowerIteration = 1e-12;
inline constexpr double kSubmultiplicative = 1e-12;
inline constexpr double kMassFloor = 1e-300;

// Two-sided 99% normal quantile used for every Wilson interval.
inline constexpr double kWilsonZ99 = 2.5758293035489004;

}  // namespace mixdecomp::tol
