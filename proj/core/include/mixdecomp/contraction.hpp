#pragma once

#include "mixdecomp/kernel.hpp"
#include "mixdecomp/partition.hpp"
#include "mixdecomp/transport.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mixdecomp {

// mu_x = 1/2 (law of the block entered on escape from x) + 1/2 delta_{block(x)}.
Vector exit_distribution(const StochasticKernel& kernel, const Partition& partition, Index x);
// One row per state, same mixture.
Matrix exit_distributions(const StochasticKernel& kernel, const Partition& partition);

struct PairEvidence {
  Index x = 0;
  Index y = 0;
  Index i = 0;
  Index j = 0;
  double w = 0.0;   // W_d(mu_x, mu_y)
  double d = 0.0;   // d(i, j)
};

enum class Coverage { exact_all_pairs, sampled };

struct ContractionEstimate {
  double alpha = 0.0;
  double beta = 0.0;
  bool certified = false;
  Coverage coverage = Coverage::exact_all_pairs;
  std::vector<PairEvidence> pair_evidence;
  PairEvidence worst_pair;
  double D_max = 1.0;
  double margin() const { return alpha - 2.0 * beta; }
};

inline constexpr double kMaxExactPairs = 1e6;

// Pairs x < y in the same or different blocks. All pairs when
// |Omega|^2 <= 1e6, otherwise pair_budget pairs stratified by block pair.
// Picks alpha from the grid maximizing alpha - 2 beta(alpha), where beta is
// the largest residual W - (1 - alpha) d.
ContractionEstimate estimate_contraction(const StochasticKernel& kernel, const Partition& partition,
                                         const BlockMetric& metric, long pair_budget, std::uint64_t seed);

// Smallest beta >= 0 that the evidence supports at the given alpha.
double beta_for_alpha(const std::vector<PairEvidence>& evidence, double alpha);

// Max over evidence of W - (1 - alpha) d - beta; <= 1e-9 for a valid certificate.
double max_violation(const ContractionEstimate& estimate);

std::vector<double> contraction_alpha_grid();

struct OccupationRegularity {
  double delta1 = 0.0;      // min_i min_x P_x[tau_esc > a1 phi_max log n]
  double delta2 = 0.0;      // 1 - max_i max_x P_x[tau_esc > a2 phi_max log n]
  long threshold1 = 0;
  long threshold2 = 0;
  bool verified1 = false;   // delta1 > 0
  bool verified2 = false;   // delta2 > 0
};

OccupationRegularity occupation_regularity(const StochasticKernel& kernel, const Partition& partition, double a1,
                                           double a2, double phi_max, Index n);

std::string coverage_name(Coverage coverage);

}  // namespace mixdecomp
