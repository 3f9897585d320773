#pragma once

#include "mixdecomp/bounds.hpp"
#include "mixdecomp/chains.hpp"
#include "mixdecomp/decomposition.hpp"
#include "mixdecomp/kernel.hpp"
#include "mixdecomp/partition.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mixdecomp {

// Exact whole-chain and per-block quantities for a (kernel, partition).
struct ChainAnalysis {
  long tau_mix = 0;
  double relaxation_time = 0.0;
  std::vector<double> phi;            // per-block trace mixing times
  long phi_max = 0;
  std::vector<double> masses;         // pi(Omega_i)
  Matrix projected;                   // Kbar
  double reversibility_residual = 0.0;
  double projected_residual = 0.0;    // detailed balance of Kbar w.r.t. the block masses
};

inline constexpr long kAnalysisHorizon = 10'000'000;

ChainAnalysis analyze_chain(const StochasticKernel& kernel, const StationaryDistribution& pi,
                            const Partition& partition, long horizon = kAnalysisHorizon);

// Fewest blocks, taken in decreasing mass order, whose total mass exceeds
// `beta`. Returned sorted.
std::vector<Index> heavy_prefix(const std::vector<double>& masses, double beta);

// bound_basic with exact tails, doubling the tabulation horizon from
// `cap_start` until a T is found or `cap_max` is passed.
BoundResult bound_basic_exact(const StochasticKernel& kernel, const Partition& partition, const ChainAnalysis& a,
                              double alpha, double beta, const std::vector<Index>& I,
                              const PeresSousiConstants& constants, long cap_start = 256, long cap_max = 8192);

struct DriftInput {
  Vector V;
  double a = 0.5;
  int k = 1;
};

// Lyapunov data for families with a known drift function: toy KCIP uses
// V(i, j) = e^{i/2} with k = m^{d+1} steps.
std::optional<DriftInput> default_drift(const ChainInstance& chain);

struct EvaluationOptions {
  double alpha = 0.45;                 // basic, basic2, bootstrap
  double hit_alpha = 0.25;             // mass level for phi_bar_hit
  PeresSousiConstants constants;
  double regular_envelope = 1.0;
  std::optional<DriftInput> drift;
  double graph_c = 0.1;
  long cap_start = 256;
  long cap_max = 8192;
};

// Regular bound: epsilon from {2^-1, ..., 2^-8} minimizing
// 1 / (epsilon delta), phi_bar_hit exact. Envelope 1 gives the raw value.
BoundResult regular_bound(const StochasticKernel& kernel, const StationaryDistribution& pi,
                          const Partition& partition, const ChainAnalysis& a, double hit_alpha, double envelope);

// Every evaluator, each flagged in notes["applicable"] ("yes" or a reason)
// and notes["target"] ("tau_mix" or "phi_bar_hit").
std::vector<BoundResult> evaluate_bounds(const StochasticKernel& kernel, const StationaryDistribution& pi,
                                         const Partition& partition, const ChainAnalysis& a,
                                         const EvaluationOptions& options);

bool applicable_mixing_bound(const BoundResult& bound);

struct Calibration {
  PeresSousiConstants constants;
  double regular_envelope = 1.0;
  long reference_tau = 0;
  double reference_max_hit = 0.0;
};

// Fits c_alpha = c'_alpha and the regular envelope so both match tau_mix on
// the reference chain (sampled audit at alpha = 1/4).
Calibration calibrate_on(const ChainInstance& reference, const std::string& name, std::uint64_t seed = 7);

}  // namespace mixdecomp
