#pragma once

#include "mixdecomp/decomposition.hpp"
#include "mixdecomp/kernel.hpp"
#include "mixdecomp/partition.hpp"
#include "mixdecomp/simulation.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mixdecomp {

// Constants relating mixing times to hitting times of large sets. A single
// pair is used for every index (c_gamma, c'_{alpha/2}, ...).
struct PeresSousiConstants {
  double c_alpha = 1.0;
  double c_alpha_prime = 1.0;
  bool calibrated = false;
  std::string calibration;   // reference instance the fit came from
};

enum class BoundStatus { ok, no_feasible_t, hypothesis_unverified, disconnected_gc };
const char* status_name(BoundStatus status);

struct BoundResult {
  std::string name;
  double value = std::numeric_limits<double>::infinity();
  std::map<std::string, double> ingredients;
  std::map<std::string, std::string> notes;
  bool universal_constant_flag = true;
  BoundStatus status = BoundStatus::ok;
  std::string provenance;    // exact | mc(reps=..,seed=..) | formula(..)

  bool finite() const { return status != BoundStatus::no_feasible_t && status != BoundStatus::disconnected_gc; }
};

struct SearchOptions {
  long T_max = long{1} << 40;
  int t_grid = 64;
};

// Least T (doubling, then bisection) with some 0 < t < T making
// max_{i in I} (phi_i / (c' t) + tail(i, T, t)) < 1/4; value (4/3) c_alpha T.
BoundResult bound_basic(const std::vector<double>& phi, OccupationTails& tails, const std::vector<double>& masses,
                        double alpha, double beta, const std::vector<Index>& I, const PeresSousiConstants& constants,
                        const SearchOptions& options = {});

// Block sets with mass >= alpha / 2. Enumerates all of them when there are at
// most `max_blocks` blocks; returns an empty list otherwise.
std::vector<std::vector<Index>> qualifying_sets(const std::vector<double>& masses, double alpha,
                                                Index max_blocks = 12);

// Joint-tail variant. `candidates` lists the block sets the max runs over; it
// is marked sampled unless it holds every qualifying set.
BoundResult bound_basic2(const std::vector<double>& phi, OccupationTails& tails, const std::vector<double>& masses,
                         double alpha, const std::vector<std::vector<Index>>& candidates, bool complete,
                         const PeresSousiConstants& constants, const SearchOptions& options = {});

// C eps^-1 delta^-1 phi_bar_hit n log(max(n, 2)).
BoundResult bound_regular(double epsilon, double delta, double phi_bar_hit, Index n, double envelope,
                          bool hypothesis_verified);

struct EscapeRegularity {
  double epsilon = 0.0;
  double delta = 0.0;     // min_i min_x P_x[tau_esc > epsilon phi_max]
  long threshold = 0;
};
// Largest delta the escape tails support at the given epsilon.
EscapeRegularity escape_regularity(const StochasticKernel& kernel, const Partition& partition, double epsilon,
                                   long phi_max);

struct ExitGraph {
  std::vector<std::vector<Index>> edges;   // i -> j when min_x P_x[exit into j] >= c
  std::optional<long> diameter;            // empty: some pair unreachable
};
ExitGraph exit_graph(const StochasticKernel& kernel, const Partition& partition, double c);

// eps phi_max D (c delta)^-D
double graph_hit_formula(double c, double epsilon, double delta, double phi_max, long D);

struct GraphHitResult {
  ExitGraph graph;
  BoundResult bound;   // an upper bound on phi_bar_hit
};
GraphHitResult bound_graph_hit(const StochasticKernel& kernel, const Partition& partition, double c, double epsilon,
                               double delta, double phi_max);

struct DriftCertificate {
  Vector V;
  double a = 0.0;
  double b = 0.0;
  int k = 1;
  double V_max = 0.0;
  bool verified = false;
  double max_violation = 0.0;   // max_x (K^k V)(x) - (1 - a) V(x) - b
};

DriftCertificate verify_drift(const StochasticKernel& kernel, Vector V, double a, double b, int k = 1);
// Smallest b making the certificate hold for the given a.
DriftCertificate fit_drift(const StochasticKernel& kernel, Vector V, double a, int k = 1);
// Sublevel set {x : V(x) <= M}.
StateSet sublevel_set(const DriftCertificate& drift, double M);

// (16 c / 3a) max(16 tau' / c', k log(16 V_max), 8 log 16), requiring M >= 4b/a.
BoundResult bound_drift(const DriftCertificate& drift, double M, double tau_mix_trace,
                        const PeresSousiConstants& constants, double gamma = 1.0 / 6.0);

struct ContractionBoundInput {
  double alpha = 0.0;
  double beta = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double phi_max = 0.0;
  double phi_bar = 0.0;
  double D_max = 1.0;
  Index n = 1;
};
BoundResult bound_contraction(const ContractionBoundInput& in, const PeresSousiConstants& constants);

// ceil(e T) ceil(log(4(1 - eps) / (1 - 4 eps))).
BoundResult bound_coupling_point(double T, double epsilon);

struct HittingMixingAudit {
  long tau_mix = 0;
  double max_hit = 0.0;
  double ratio = 0.0;           // tau_mix / max_hit
  StateSet worst_set;
  Index worst_start = -1;
  long sets_evaluated = 0;
  bool lower_bound_only = false;
};
inline constexpr Index kMaxExactAuditStates = 15;

HittingMixingAudit peres_sousi_audit(const StochasticKernel& kernel, const StationaryDistribution& pi, double alpha,
                                     SubsetMode mode, long horizon, long samples = 256, std::uint64_t seed = 7);

// c_alpha = c'_alpha = tau_mix / max_hit on the reference chain.
PeresSousiConstants calibrate_constants(const HittingMixingAudit& audit, const std::string& reference);

}  // namespace mixdecomp
