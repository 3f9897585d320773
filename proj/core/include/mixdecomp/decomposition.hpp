#pragma once

#include "mixdecomp/kernel.hpp"
#include "mixdecomp/partition.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mixdecomp {

// Chain watched only on `subset`: K_AA + K_AB (I - K_BB)^{-1} K_BA.
StochasticKernel trace_kernel(const StochasticKernel& kernel, const StateSet& subset);
StochasticKernel trace_kernel(const StochasticKernel& kernel, const StationaryDistribution& pi,
                              const Partition& partition, Index block);

StochasticKernel projected_kernel(const StochasticKernel& kernel, const StationaryDistribution& pi,
                                  const Partition& partition);
StochasticKernel less_lazy_projection(const StochasticKernel& projected);

struct EscapeStatistics {
  Index block = 0;
  StateSet members;
  Vector expected_escape;             // per member, in `members` order
  Matrix escape_tail;                 // (horizon + 1) x |members|, P_x[tau_esc > t]
  Matrix exit_block_distribution;     // |members| x n_blocks
};

EscapeStatistics escape_analysis(const StochasticKernel& kernel, const Partition& partition, Index block,
                                 long horizon);
// Rows: members of `block`; columns: blocks. Probability of the block entered on escape.
Matrix exit_block_distribution(const StochasticKernel& kernel, const Partition& partition, Index block);
// P_x[tau_esc > t] for every member, by repeated squaring of the block sub-kernel.
Vector escape_survival(const StochasticKernel& kernel, const Partition& partition, Index block, long t);

enum class SubsetMode { exact, sampled };

struct AvgHitResult {
  std::optional<double> value;       // empty: NoQualifyingSet
  bool lower_bound_only = false;     // sampled mode
  std::vector<Index> worst_blocks;
  Index worst_start = -1;
  long subsets_evaluated = 0;
};

inline constexpr Index kMaxExactSubsetBlocks = 20;

AvgHitResult avg_hit_time(const StochasticKernel& kernel, const StationaryDistribution& pi,
                          const Partition& partition, double alpha, SubsetMode mode,
                          long samples = 512, std::uint64_t seed = 1);

struct DecompositionReport {
  std::vector<StochasticKernel> trace_kernels;
  StochasticKernel projected;
  std::vector<double> block_masses;
  std::vector<long> block_mixing_times;
  long phi_max = 0;
  bool horizon_exceeded = false;
};

DecompositionReport decompose(const StochasticKernel& kernel, const StationaryDistribution& pi,
                              const Partition& partition, long horizon);

}  // namespace mixdecomp
