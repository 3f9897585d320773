#include "mixdecomp/chains.hpp"
#include "mixdecomp/decomposition.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/evaluate.hpp"
#include "mixdecomp/kernel_io.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>

using namespace mixdecomp;

namespace {

// One-step law of a sampler from x against a kernel row; TV <= 3 summed SEs.
void expect_sampler_matches_row(const Sampler& s, State x, const Vector& row, const std::function<Index(State)>& index,
                                std::uint64_t seed) {
  constexpr long draws = 100000;
  Vector counts = Vector::Zero(row.size());
  Rng rng(seed, 3);
  for (long r = 0; r < draws; ++r) counts(index(s.step(x, rng))) += 1;
  counts /= static_cast<double>(draws);
  double se = 0;
  for (Index y = 0; y < row.size(); ++y) se += std::sqrt(row(y) * (1 - row(y)) / draws);
  EXPECT_LE(tv_distance(counts, row), 3 * se) << "start " << x;
}

}  // namespace

TEST(PinceNez, Structure) {
  const ChainInstance c = pince_nez(8);
  const Matrix& k = c.kernel->matrix();
  ASSERT_EQ(k.rows(), 16);
  int degree3 = 0;
  for (Index x = 0; x < 16; ++x) {
    EXPECT_NEAR(k.row(x).sum(), 1.0, 1e-15);
    int deg = 0;
    for (Index y = 0; y < 16; ++y)
      if (y != x && k(x, y) != 0.0) {
        EXPECT_DOUBLE_EQ(k(x, y), 1.0 / 6.0);
        ++deg;
      }
    degree3 += deg == 3;
    EXPECT_NEAR(k.col(x).sum(), 1.0, 1e-14);   // doubly stochastic, so pi is uniform
    EXPECT_NEAR((*c.pi)(x), 1.0 / 16, 1e-15);
  }
  EXPECT_EQ(degree3, 2);
  EXPECT_EQ(c.partition.n_blocks(), 2);
  EXPECT_THROW(pince_nez(2), Error);
}

TEST(ExpanderPair, ExampleProperties) {
  const int m = 16, d = 3;
  const ChainInstance c = expander_pair(m, d, 0.25, 7);
  const Matrix& k = c.kernel->matrix();
  for (Index x = 0; x < 2 * m; ++x) EXPECT_GE(k(x, x), 0.25 - 1e-15);
  const auto masses = c.partition.masses(*c.pi);
  for (double w : masses) EXPECT_NEAR(w, 1.0 / m, 1e-14);
  EXPECT_NEAR((stationary_distribution(*c.kernel).weights() - c.pi->weights()).cwiseAbs().maxCoeff(), 0, 1e-10);
  // Trace on the lower level is the 3/4-lazy walk on the graph.
  const StochasticKernel lower = trace_kernel(*c.kernel, c.marked);
  Matrix q = 0.75 * Matrix::Identity(m, m);
  for (int u = 0; u < m; ++u)
    for (int v : (*c.graph)[static_cast<std::size_t>(u)]) q(u, v) += 0.25 / d;
  EXPECT_LE((lower.matrix() - q).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(second_eigenvalue(*c.graph), kExpanderLambdaCap);
  EXPECT_THROW(expander_pair(16, 3, 0.5, 7), Error);
}

TEST(ExpanderPair, SeedReproducible) {
  EXPECT_EQ(random_regular_graph(40, 4, 11), random_regular_graph(40, 4, 11));
  EXPECT_NE(random_regular_graph(40, 4, 11), random_regular_graph(40, 4, 12));
  EXPECT_EQ(kernel_hash(*expander_pair(32, 4, 0.2, 3).kernel), kernel_hash(*expander_pair(32, 4, 0.2, 3).kernel));
  for (const auto& adj : random_regular_graph(40, 4, 11)) EXPECT_EQ(adj.size(), 4u);
}

TEST(ToyKcip, RowsAndBlockMixingScale) {
  double prev = 0;
  for (int m : {4, 8}) {
    const ChainInstance c = toy_kcip(m, 1);
    for (Index x = 0; x < 3 * m; ++x) EXPECT_NEAR(c.kernel->matrix().row(x).sum(), 1.0, 1e-15);
    EXPECT_TRUE(check_reversible(*c.kernel, *c.pi).reversible);
    const ChainAnalysis a = analyze_chain(*c.kernel, *c.pi, c.partition);
    if (prev > 0) {
      const double ratio = static_cast<double>(a.phi_max) / prev;
      EXPECT_GT(ratio, 1.5);
      EXPECT_LT(ratio, 3.0);
    }
    prev = static_cast<double>(a.phi_max);
  }
}

TEST(Kcip, FiveCycleReversibleAgainstProductWeights) {
  KcipOptions o;
  o.c = 1.0;
  const ChainInstance c = kcip(cycle_graph(5), o);
  ASSERT_EQ(c.kernel->size(), 31);
  const double p = 0.2;
  Vector pi(31);
  for (Index i = 0; i < 31; ++i) {
    const int k = std::popcount(static_cast<unsigned>(i + 1));
    pi(i) = std::pow(p, k) * std::pow(1 - p, 5 - k);
  }
  pi /= pi.sum();
  EXPECT_LE(check_reversible(*c.kernel, StationaryDistribution(pi)).max_residual, 1e-12);
  EXPECT_LE((stationary_distribution(*c.kernel).weights() - pi).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Kcip, SamplerMatchesExplicitKernel) {
  KcipOptions o;
  o.c = 2.0;
  const ChainInstance c = kcip(lattice_graph(2, 3), o);
  ASSERT_EQ(c.kernel->size(), 255);
  // The explicit sampler walks kernel indices, which are masks minus one.
  for (State x : {State{1}, State{3}, State{0x55}, State{0xff}})
    expect_sampler_matches_row(*c.sampler, x - 1, c.kernel->matrix().row(static_cast<Index>(x - 1)).transpose(),
                               [](State y) { return static_cast<Index>(y); }, x);
  // The non-explicit sampler implements the same law.
  o.explicit_kernel = false;
  const ChainInstance s = kcip(lattice_graph(2, 3), o);
  EXPECT_FALSE(s.kernel.has_value());
  expect_sampler_matches_row(*s.sampler, 0x81, c.kernel->matrix().row(0x80).transpose(),
                             [](State y) { return static_cast<Index>(y - 1); }, 99);
}

TEST(Kcip, ParticleCountNeverZero) {
  KcipOptions o;
  o.explicit_kernel = false;
  const ChainInstance s = kcip(cycle_graph(7), o);
  Rng rng(4, 0);
  State x = 1;
  for (int step = 0; step < 200000; ++step) {
    x = s.sampler->step(x, rng);
    ASSERT_NE(x, 0u);
  }
}

TEST(Torus, ProductFormAndAcceptance) {
  TorusOptions o;
  o.m = 3;
  const ChainInstance c = torus_metropolis(o);
  ASSERT_EQ(c.kernel->size(), 216);
  Vector pi(216);
  for (Index x = 0; x < 216; ++x) {
    Index rest = x;
    double h = 0;
    for (int i = 0; i < 3; ++i) {
      const int u = static_cast<int>(rest % 6);
      h += std::min(u, 5 - u);
      rest /= 6;
    }
    pi(x) = std::exp(-o.C * h * std::log(3.0));
  }
  pi /= pi.sum();
  EXPECT_LE((c.pi->weights() - pi).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE(check_reversible(*c.kernel, *c.pi).reversible);
  // State 0 -> 1 raises H by one: proposal 1/(3m) times m^-C.
  EXPECT_NEAR((*c.kernel)(0, 1), 1.0 / 9.0 * std::pow(3.0, -o.C), 1e-18);
  // State 0 -> 5 (wrap) keeps H = 0: always accepted.
  EXPECT_NEAR((*c.kernel)(0, 5), 1.0 / 9.0, 1e-15);
}

TEST(Torus, TraceMassAndBlocks) {
  EXPECT_GE(torus_trace_mass(4, 3, 7.0, 1), 0.9);
  EXPECT_EQ(torus_block(0, 3, 3), 0);
  EXPECT_EQ(torus_block(3, 3, 3), 1);           // coordinate 0 at 3 >= l
  EXPECT_EQ(torus_block(3 + 6 * 4, 3, 3), 3);   // coordinates (3, 4, 0)
  TorusOptions o;
  o.m = 3;
  o.k_trace = 1;
  const ChainInstance c = torus_metropolis(o);
  EXPECT_EQ(c.partition.n_blocks(), 8);
  EXPECT_LT(c.kernel->size(), 216);
}

TEST(Specs, ParseAndBuild) {
  const ChainSpec s = parse_chain_spec("expander_pair:m=16,d=3,epsilon=0.2,seed=5");
  EXPECT_EQ(s.family, "expander_pair");
  EXPECT_EQ(s.params.at("m"), "16");
  EXPECT_EQ(s.seed.value(), 5u);
  EXPECT_EQ(build_chain(s).kernel->size(), 32);
  EXPECT_EQ(build_chain(parse_chain_spec("pince_nez:m=5")).kernel->size(), 10);
  EXPECT_THROW(build_chain(parse_chain_spec("nope:m=5")), Error);
  EXPECT_THROW(build_chain(parse_chain_spec("pince_nez:q=5")), Error);
}
