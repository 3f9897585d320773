#pragma once

#include "mixdecomp/error.hpp"
#include "mixdecomp/kernel.hpp"

#include <Eigen/LU>

#include <string>
#include <vector>

namespace mixdecomp::detail {

// (I - K_SS) with the diagonal taken from off-diagonal row mass, so rows
// whose only escape is a tiny rate keep full relative precision.
inline Matrix killed_generator(const StochasticKernel& kernel, const StateSet& states) {
  const auto s = static_cast<Index>(states.size());
  Matrix a(s, s);
  for (Index r = 0; r < s; ++r) {
    const Index x = states[static_cast<std::size_t>(r)];
    for (Index c = 0; c < s; ++c) a(r, c) = -kernel(x, states[static_cast<std::size_t>(c)]);
    a(r, r) = kernel.off_diagonal_mass(x);
  }
  return a;
}

// Index of each state inside `states`, or -1.
inline std::vector<Index> position_map(Index n, const StateSet& states) {
  std::vector<Index> pos(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < states.size(); ++k) pos[static_cast<std::size_t>(states[k])] = static_cast<Index>(k);
  return pos;
}

inline StateSet complement(Index n, const StateSet& states) {
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (Index x : states) in[static_cast<std::size_t>(x)] = true;
  StateSet out;
  for (Index x = 0; x < n; ++x)
    if (!in[static_cast<std::size_t>(x)]) out.push_back(x);
  return out;
}

// LU solve with a conditioning guard and a relative residual check.
template <typename Rhs>
Matrix solve_checked(const Matrix& a, const Rhs& b, Errc on_singular, const std::string& what) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15)) fail(on_singular, what + " (rcond " + std::to_string(rcond) + ")");
  Matrix x = lu.solve(b);
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  const double residual = (a * x - b).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-8 * scale)) fail(Errc::AssertionFailed, what + ": linear solve residual " + std::to_string(residual));
  return x;
}

}  // namespace mixdecomp::detail
