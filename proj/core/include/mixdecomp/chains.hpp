#pragma once

#include "mixdecomp/kernel.hpp"
#include "mixdecomp/partition.hpp"
#include "mixdecomp/simulation.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mixdecomp {

using Graph = std::vector<std::vector<int>>;   // adjacency lists

struct ChainInstance {
  std::string family;
  std::map<std::string, double> params;
  std::optional<StochasticKernel> kernel;        // empty for sampler-only instances
  std::shared_ptr<const Sampler> sampler;
  Partition partition = Partition::single_block(1);
  std::optional<StationaryDistribution> pi;      // closed-form stationary law, when known
  StateSet marked;                               // family-specific marker set (e.g. the lower level)
  std::optional<Graph> graph;
  std::optional<BlockMap> blocks;                // block classifier for sampler-only use
};

// Two m-cycles on states 0..m-1 and m..2m-1 joined by the edge (0, m); every
// edge has weight 1/6. Blocks are the two cycles.
ChainInstance pince_nez(int m);

// Simple d-regular graph on m vertices from the pairing model, pairing points
// one at a time and restarting when stuck.
Graph random_regular_graph(int m, int d, std::uint64_t seed);
// Second largest eigenvalue of the simple random walk on a regular graph.
double second_eigenvalue(const Graph& graph);

// States (1,u) = u and (2,u) = m + u. The lower level carries the 3/4-lazy
// walk on a random d-regular graph whose simple walk has lambda_2 <= 0.9.
ChainInstance expander_pair(int m, int d, double epsilon, std::uint64_t seed);
inline constexpr double kExpanderLambdaCap = 0.9;

// State (i, j) has index 3(i - 1) + (j - 1); blocks {(i,1), (i,2), (i,3)}.
ChainInstance toy_kcip(int m, int d);

Graph cycle_graph(int n);
Graph lattice_graph(int L, int dim);

struct KcipOptions {
  double c = 1.0;
  int n_cap = 3;
  std::optional<Graph> neighborhood;   // defaults to the adjacency of the graph
  bool explicit_kernel = true;
};

// States are nonzero bitmasks over the vertices; explicit index = mask - 1.
class KcipSampler final : public Sampler {
 public:
  KcipSampler(Graph neighborhood, double p);
  State step(State x, Rng& rng) const override;

 private:
  Graph nbhd_;
  double p_;
};

ChainInstance kcip(const Graph& graph, const KcipOptions& options);
inline constexpr int kMaxKcipVertices = 64;

struct TorusOptions {
  int m = 3;
  int l = 3;
  double C = 7.0;
  std::optional<int> k_trace;
};

// Unnormalized one-coordinate weight exp(-C min(u, 2l - 1 - u) log m).
double torus_weight(int u, int m, int l, double C);
// pi(Omega^(k)) from the product form.
double torus_trace_mass(int m, int l, double C, int k);
// Block of a full-space state: bit i set when coordinate i is >= l.
Index torus_block(State x, int m, int l);

// Metropolis chain on Z_{2l}^m. With k_trace the kernel is the trace on
// Omega^(k) (states listed in increasing full-space index) and `marked`
// holds those full-space indices.
ChainInstance torus_metropolis(const TorusOptions& options);

class TorusSampler final : public Sampler {
 public:
  TorusSampler(int m, int l, double C);
  State step(State x, Rng& rng) const override;

 private:
  int m_, l_;
  double accept_;   // m^-C
};

struct ChainSpec {
  std::string family;
  std::map<std::string, std::string> params;
  std::optional<std::uint64_t> seed;
};

// "family:key=value,key=value"; a seed key becomes ChainSpec::seed.
ChainSpec parse_chain_spec(const std::string& text);
ChainInstance build_chain(const ChainSpec& spec);

}  // namespace mixdecomp
