#pragma once

// Brute-force reference computations. None of these call into the library
// beyond its types, so they can validate it independently.

#include "mixdecomp/kernel.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using mixdecomp::Index;
using mixdecomp::Matrix;
using mixdecomp::Vector;

// Random reversible chain from symmetric conductances on a connected graph;
// the diagonal conductance adds laziness. pi is proportional to row sums.
struct RandomChain {
  Matrix K;
  Vector pi;
};
RandomChain random_reversible(int n, std::mt19937_64& gen);

// Random partition of n states into `blocks` nonempty blocks.
std::vector<Index> random_partition(int n, int blocks, std::mt19937_64& gen);

// Stationary law by power iteration of (I + K) / 2.
Vector stationary(const Matrix& K);

// min{t >= 1 : max_x TV(K^t(x, .), pi) < 1/4} by explicit matrix powers.
long mixing_time(const Matrix& K, const Vector& pi, long horizon);

// Trace kernel by summing excursions through the complement until the
// remaining mass is below 1e-16.
Matrix trace_by_absorption(const Matrix& K, const std::vector<Index>& A);

// Projected kernel straight from the definition.
Matrix projected(const Matrix& K, const Vector& pi, const std::vector<Index>& block_of, Index n_blocks);

// E_x[tau_A] by value iteration.
Vector hitting_by_iteration(const Matrix& K, const std::vector<Index>& A);

// P_x[tau_A > t] by propagating killed mass.
Vector hitting_tail(const Matrix& K, const std::vector<Index>& A, long t);

// P_x[kappa_b(T) < t] by enumerating every path of length T (tiny chains only).
Vector occupation_tail_by_paths(const Matrix& K, const std::vector<Index>& block_of, Index block, long T, long t);

// Exit law of the block containing x, by summing the killed walk.
Vector exit_law(const Matrix& K, const std::vector<Index>& block_of, Index n_blocks, Index x);

// W1 on the path metric |i - j|: sum of absolute CDF differences.
double w1_path(const Vector& mu, const Vector& nu);
// W1 on the discrete metric: total variation.
double w1_discrete(const Vector& mu, const Vector& nu);

// Least-squares slope in log-log coordinates.
double slope(const std::vector<double>& x, const std::vector<double>& y);

// Upper end of the Wilson score interval.
double wilson_upper(long successes, long n, double z);

}  // namespace oracle
