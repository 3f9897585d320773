#pragma once

#include "mixdecomp/kernel.hpp"

namespace mixdecomp {

// Metric on block indices with 1 <= d(i,j) <= D_max off the diagonal.
struct BlockMetric {
  Matrix d;
  double D_max = 1.0;

  // Validates symmetry, zero diagonal, the [1, D_max] range and the triangle
  // inequality; throws InvalidMetric.
  static BlockMetric from_matrix(Matrix d);
  static BlockMetric discrete(Index n);
  static BlockMetric path(Index n);
  // Hamming distance between the bitmasks 0..2^bits - 1.
  static BlockMetric hamming(int bits);

  Index size() const { return d.rows(); }
};

struct TransportPlan {
  double cost = 0.0;
  Matrix coupling;   // coupling(i, j): mass moved from i to j
};

inline constexpr Index kMaxTransportSupport = 2000;

// Exact optimal transport between two distributions under `cost`, by
// successive shortest paths on the bipartite surplus/deficit graph.
TransportPlan optimal_transport(const Vector& mu, const Vector& nu, const Matrix& cost);

double wasserstein(const Vector& mu, const Vector& nu, const BlockMetric& metric);

}  // namespace mixdecomp
