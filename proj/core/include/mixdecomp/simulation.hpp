#pragma once

#include "mixdecomp/kernel.hpp"
#include "mixdecomp/partition.hpp"
#include "mixdecomp/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mixdecomp {

using State = std::uint64_t;

// One-step transition law; implementations must be stateless apart from the
// caller's Rng so replicas can share an instance across threads.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual State step(State x, Rng& rng) const = 0;
};

// Explicit-kernel sampler: alias tables for rows with more than 8 nonzeros,
// inverse CDF otherwise.
class KernelSampler final : public Sampler {
 public:
  explicit KernelSampler(const StochasticKernel& kernel);
  State step(State x, Rng& rng) const override;

 private:
  struct Row {
    std::vector<std::uint32_t> targets;
    std::vector<double> cdf;                 // inverse-CDF rows
    std::vector<double> alias_prob;          // alias rows
    std::vector<std::uint32_t> alias_index;
  };
  std::vector<Row> rows_;
};

// Block classifier for occupation bookkeeping.
struct BlockMap {
  Index n_blocks = 1;
  std::function<Index(State)> of;
};
BlockMap block_map(const Partition& partition);

struct OccupationRecord {
  long T = 0;
  State start = 0;
  std::vector<long> kappa;   // kappa_i(T) = #{1 <= u <= T : X_u in block i}
  std::vector<long> N;       // N[i * n + j]: transitions i -> j landing at times 1 <= s < T
  Index n_blocks = 0;

  long transitions(Index i, Index j) const { return N[static_cast<std::size_t>(i * n_blocks + j)]; }
};

struct Trajectory {
  std::vector<std::uint32_t> states;   // X_0..X_T
};

struct SimulationResult {
  Trajectory trajectory;
  OccupationRecord record;
};

SimulationResult simulate(const Sampler& sampler, const BlockMap& blocks, State x0, long T,
                          std::uint64_t seed, std::uint64_t stream = 0);

// Binary dump: "MXDT", u32 version, u32 n_states, u32 T, then T+1 u32 states,
// all little-endian.
void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory, std::uint32_t n_states);
Trajectory read_trajectory(const std::filesystem::path& path, std::uint32_t* n_states = nullptr);

struct TailEstimate {
  double point = 0.0;
  double wilson_low = 0.0;
  double wilson_hi = 1.0;
  long reps = 0;
};

TailEstimate wilson(long successes, long reps, double z = 2.5758293035489004);

struct HittingEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  long reps = 0;
  long truncated = 0;          // replicates that hit the 1e9-step cap
  TailEstimate tail;           // P[tau_A > tail_threshold]
  long tail_threshold = 0;
};

inline constexpr long kHittingHorizonCap = 1'000'000'000;

HittingEstimate empirical_hitting(const Sampler& sampler, const std::function<bool(State)>& in_target, State x0,
                                  long reps, std::uint64_t seed, long tail_threshold = 0);

// P[ kappa_i(T) < t for every i in blocks ] started from x0.
TailEstimate empirical_occupation_tail(const Sampler& sampler, const BlockMap& map,
                                       const std::vector<Index>& blocks, long T, long t, State x0, long reps,
                                       std::uint64_t seed);

// Exact P_x[kappa_i(T) < t] for every start x, by DP over state x capped counter.
Vector exact_occupation_tail(const StochasticKernel& kernel, const Partition& partition, Index block, long T,
                             long t);
// Exact joint version over a block set; counters for every block in `blocks`.
Vector exact_joint_occupation_tail(const StochasticKernel& kernel, const Partition& partition,
                                   const std::vector<Index>& blocks, long T, long t);

inline constexpr double kMaxProductSpace = 1e7;

// Source of upper bounds on max_z P_z[ kappa_i(T) < t for all i in I ].
class OccupationTails {
 public:
  virtual ~OccupationTails() = default;
  virtual double tail(Index block, long T, long t) = 0;
  virtual double joint_tail(const std::vector<Index>& blocks, long T, long t) = 0;
  virtual bool exact() const = 0;
  virtual std::string provenance() const = 0;
};

// Exact per-block tails tabulated once up to T_cap on a fine counter grid.
// Queries snap t up to the grid, which keeps them upper bounds. Joint tails
// are bounded by the smallest tabulated per-block tail.
class ExactOccupationTails final : public OccupationTails {
 public:
  ExactOccupationTails(const StochasticKernel& kernel, const Partition& partition, std::vector<Index> blocks,
                       long T_cap);
  double tail(Index block, long T, long t) override;
  double joint_tail(const std::vector<Index>& blocks, long T, long t) override;
  bool exact() const override { return true; }
  std::string provenance() const override { return "exact"; }
  long horizon() const { return T_cap_; }

 private:
  long T_cap_;
  std::vector<long> grid_;
  std::vector<Index> blocks_;
  std::vector<std::vector<float>> table_;   // per block: (T_cap + 1) x grid
};

// Monte Carlo tails with Wilson 99% upper bounds, maximized over a start list.
// Trajectories for a horizon T share random numbers across T, so estimates
// are monotone in T. A few path checkpoints are kept so a new horizon resumes
// from the nearest shorter one instead of restarting.
class McOccupationTails final : public OccupationTails {
 public:
  McOccupationTails(std::shared_ptr<const Sampler> sampler, BlockMap map, std::vector<State> starts, long reps,
                    std::uint64_t seed);
  double tail(Index block, long T, long t) override;
  double joint_tail(const std::vector<Index>& blocks, long T, long t) override;
  bool exact() const override { return false; }
  std::string provenance() const override;
  long reps() const { return reps_; }
  std::uint64_t seed() const { return seed_; }

 private:
  struct Checkpoint {
    long T = 0;
    std::vector<State> x;                 // [start][rep]
    std::vector<Rng> rng;                 // [start][rep]
    std::vector<std::uint32_t> kappa;     // [start][rep][block]
  };
  static constexpr std::size_t kMaxCheckpoints = 3;

  void ensure(long T);
  std::shared_ptr<const Sampler> sampler_;
  BlockMap map_;
  std::vector<State> starts_;
  long reps_;
  std::uint64_t seed_;
  std::vector<Checkpoint> checkpoints_;   // most recently used last; back() is the current horizon
  std::vector<std::vector<Index>> joint_keys_;
  std::vector<std::vector<std::uint32_t>> joint_sorted_;   // per key: [start] sorted max-kappa over reps
};

// Worker count from MIXDECOMP_THREADS, defaulting to hardware concurrency.
unsigned thread_count();
// Runs body(k) for k in [0, tasks) across worker threads.
void parallel_for(long tasks, const std::function<void(long)>& body);

}  // namespace mixdecomp
