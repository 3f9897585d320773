#pragma once

#include "mixdecomp/bounds.hpp"
#include "mixdecomp/kernel.hpp"
#include "mixdecomp/partition.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mixdecomp {

// (kappa, N) is plausible at horizon T when, for every ordered pair (i, j)
// including i = j,
//   |N(i,j) - kappa(i) Q(i,j)|, |N(i,j) - kappa(j) Q(j,i)| <= B sqrt(kappa(i) / T)
//   |sum_i N(i,j) - kappa(j)|, |sum_j N(i,j) - kappa(i)| <= 1/T
// with kappa and N probability vectors. The well-covering time is the least T
// at which every plausible kappa has kappa(i) > t_i / T for all i.
struct WellCoveringQuery {
  StochasticKernel Q;
  std::vector<double> thresholds;
  double B = 1.0;
};

enum class WcMethod { oracle, tree, propagation, comparison };
const char* method_name(WcMethod method);

struct ComparisonStep {
  std::string transform;
  double factor = 1.0;
};

struct WellCoveringCertificate {
  double T = 0.0;
  WcMethod method = WcMethod::oracle;
  std::vector<ComparisonStep> provenance;
  double grid_tolerance = 0.0;   // oracle only
  bool extension = false;        // propagation beyond trees
};

struct OracleWitness {
  std::vector<double> kappa;
  Matrix N;
};

struct OracleResult {
  bool covered = true;
  std::vector<OracleWitness> witnesses;
  double grid_tolerance = 0.0;
  long points_checked = 0;
};

inline constexpr Index kMaxOracleBlocks = 3;

// Discretized search for plausible (kappa, N) with some kappa(i) <= t_i / T.
// kappa runs over a barycentric grid plus the slices kappa(i) = t_i / T; for
// each kappa the N constraints are intervals, so feasibility is a bounded flow.
OracleResult feasibility_oracle(const WellCoveringQuery& query, double T, int grid_resolution = 64,
                                std::size_t max_witnesses = 4);

// Least integer T the oracle reports as covered (doubling, then bisection).
std::optional<WellCoveringCertificate> oracle_wc_time(const WellCoveringQuery& query, int grid_resolution = 64,
                                                      long T_max = long{1} << 50);

// n max(10^3 Delta^2 B^2 D^2, 4 phi) for Q(i,j) = 1/(2 Delta) on tree edges.
WellCoveringCertificate tree_bound(const StochasticKernel& Q, int Delta, double phi, double B);

// Lower bounds spread from a pigeonhole root along the support of Q using
// kappa(j) >= (kappa(l) Q(l,j) - 2 B sqrt(kappa(l) / T)) / Q(j,l).
// Empty when no T up to T_max certifies.
std::optional<WellCoveringCertificate> propagation_bound(const WellCoveringQuery& query,
                                                         long T_max = long{1} << 60);

struct WcTransform {
  enum class Kind { monotone, lazify, scale_thresholds, scale_B } kind = Kind::scale_thresholds;
  double alpha = 1.0;
  std::optional<StochasticKernel> target;   // monotone: the kernel being certified
  std::optional<StochasticKernel> base;     // monotone: certified kernel; lazify: the 1/2-lazy kernel
};

WellCoveringCertificate compare_wc(const WellCoveringCertificate& certificate, const WcTransform& transform);

// Certified well-covering time for (thresholds, B), or empty.
using WcProvider = std::function<std::optional<double>(const std::vector<double>& thresholds, double B)>;

// Least T with T > tau_wc(8 c' phi'_1, ..., 8 c' phi'_n, sqrt(8 phi_max log(64 n^2 T))),
// phi'_i = phi_i 1{i in I}; value (4/3) c_alpha T.
BoundResult bootstrap_mixing_bound(const std::vector<double>& phi, const std::vector<double>& masses,
                                   const std::vector<Index>& I, double alpha, double beta, const WcProvider& provider,
                                   const std::string& provider_name, const PeresSousiConstants& constants,
                                   long T_max = long{1} << 60);

struct ConcentrationRow {
  double c = 0.0;
  long t = 0;
  int orientation = 1;   // 1: departures from i into j; 2: arrivals into j from i
  long start = 0;
  double empirical = 0.0;
  double wilson_hi = 0.0;
  double bound = 0.0;
  long reps = 0;
};

// Empirical P_x[|N_{i,j}(kappa_i^{-1}(t)) / (t+1) - Kbar(i,j)| > c] and its
// arrival-side counterpart against 4 exp(-c^2 (t+1) / (8 phi_max)).
std::vector<ConcentrationRow> concentration_audit(const StochasticKernel& kernel, const StationaryDistribution& pi,
                                                  const Partition& partition, Index i, Index j,
                                                  const std::vector<long>& t_grid, const std::vector<double>& c_grid,
                                                  long reps, std::uint64_t seed, double phi_max,
                                                  const StateSet& starts);

void write_concentration_csv(std::ostream& out, const std::vector<ConcentrationRow>& rows);

}  // namespace mixdecomp
