#include "mixdecomp/chains.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/well_covering.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace mixdecomp;

namespace {

// Q(i,j) = 1/(2 Delta) on tree edges, remainder on the diagonal.
StochasticKernel tree_walk(Index n, const std::vector<std::pair<Index, Index>>& edges, int Delta) {
  Matrix q = Matrix::Zero(n, n);
  for (auto [a, b] : edges) q(a, b) = q(b, a) = 1.0 / (2 * Delta);
  for (Index i = 0; i < n; ++i) q(i, i) = 1.0 - q.row(i).sum();
  return StochasticKernel(q);
}

double oracle_T(const StochasticKernel& Q, std::vector<double> t, double B) {
  const auto c = oracle_wc_time(WellCoveringQuery{Q, std::move(t), B});
  return c ? c->T : INFINITY;
}

const StochasticKernel kOne = StochasticKernel(Matrix::Ones(1, 1));

}  // namespace

TEST(Oracle, SingleBlockCoveredIffTExceedsThreshold) {
  const WellCoveringQuery q{kOne, {5.0}, 1.0};
  EXPECT_FALSE(feasibility_oracle(q, 5.0).covered);
  EXPECT_TRUE(feasibility_oracle(q, 6.0).covered);
  EXPECT_EQ(oracle_wc_time(q)->T, 6.0);
}

TEST(Oracle, LargeTForcesStationaryOccupation) {
  // kappa must approach the stationary law (1/2, 1/2), which clears t_i / T.
  const auto Q = tree_walk(2, {{0, 1}}, 1);
  const WellCoveringQuery q{Q, {10.0, 10.0}, 1.0};
  EXPECT_FALSE(feasibility_oracle(q, 20.0).covered);
  EXPECT_TRUE(feasibility_oracle(q, 1e6).covered);
  const auto r = feasibility_oracle(q, 20.0);
  ASSERT_FALSE(r.witnesses.empty());
  EXPECT_NEAR(r.grid_tolerance, 2.0 / 64, 1e-12);
}

TEST(Oracle, TooManyBlocks) {
  const auto Q = tree_walk(4, {{0, 1}, {1, 2}, {2, 3}}, 2);
  try {
    feasibility_oracle(WellCoveringQuery{Q, {1, 1, 1, 1}, 1.0}, 10.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooManyBlocks);
  }
}

TEST(Tree, FormulaExamples) {
  EXPECT_DOUBLE_EQ(tree_bound(tree_walk(4, {{0, 1}, {1, 2}, {2, 3}}, 2), 2, 1.0, 1.0).T, 144000.0);
  EXPECT_DOUBLE_EQ(tree_bound(tree_walk(2, {{0, 1}}, 1), 1, 1e6, 0.01).T, 8e6);
}

TEST(Tree, RejectsNonTrees) {
  const auto cycle = tree_walk(3, {{0, 1}, {1, 2}, {2, 0}}, 2);
  EXPECT_THROW(tree_bound(cycle, 2, 1.0, 1.0), Error);
  const auto star = tree_walk(4, {{0, 1}, {0, 2}, {0, 3}}, 3);
  EXPECT_THROW(tree_bound(star, 2, 1.0, 1.0), Error);   // degree 3 > Delta
}

TEST(Soundness, OracleBelowTreeAndPropagationOnSmallTrees) {
  const std::vector<StochasticKernel> trees = {tree_walk(2, {{0, 1}}, 1), tree_walk(3, {{0, 1}, {1, 2}}, 2),
                                               tree_walk(3, {{0, 1}, {0, 2}}, 2)};
  for (const auto& Q : trees)
    for (double phi : {2.0, 20.0})
      for (double B : {0.5, 1.0}) {
        const std::vector<double> t(static_cast<std::size_t>(Q.size()), phi);
        const double o = oracle_T(Q, t, B);
        const int Delta = Q.size() == 2 ? 1 : 2;
        EXPECT_LE(o, tree_bound(Q, Delta, phi, B).T);
        const auto p = propagation_bound(WellCoveringQuery{Q, t, B});
        ASSERT_TRUE(p.has_value());
        EXPECT_LE(o, p->T);
        EXPECT_TRUE(p->extension);
      }
}

TEST(Propagation, SingleBlockAndTreeComparison) {
  EXPECT_EQ(propagation_bound(WellCoveringQuery{kOne, {7.0}, 1.0})->T, 8.0);
  for (Index n = 2; n <= 8; ++n) {
    std::vector<std::pair<Index, Index>> path;
    for (Index i = 0; i + 1 < n; ++i) path.push_back({i, i + 1});
    const int Delta = n == 2 ? 1 : 2;
    const auto Q = tree_walk(n, path, Delta);
    const auto p = propagation_bound(WellCoveringQuery{Q, std::vector<double>(static_cast<std::size_t>(n), 5.0), 1.0});
    ASSERT_TRUE(p.has_value());
    EXPECT_LE(p->T, 2 * tree_bound(Q, Delta, 5.0, 1.0).T) << "n = " << n;
  }
}

TEST(Oracle, MonotoneInThresholdsAndB) {
  const auto Q = tree_walk(3, {{0, 1}, {1, 2}}, 2);
  double prev = 0;
  for (double t : {1.0, 4.0, 16.0}) {
    const double T = oracle_T(Q, {t, 2.0, 2.0}, 1.0);
    EXPECT_GE(T, prev);
    prev = T;
  }
  prev = 0;
  for (double B : {0.25, 0.5, 1.0, 2.0}) {
    const double T = oracle_T(Q, {2.0, 2.0, 2.0}, B);
    EXPECT_GE(T, prev);
    prev = T;
  }
}

TEST(Oracle, ThresholdScalingWithinGridTolerance) {
  const auto Q = tree_walk(2, {{0, 1}}, 1);
  for (double a : {2.0, 3.0}) {
    const double base = oracle_T(Q, {4.0, 4.0}, 1.0);
    const double scaled = oracle_T(Q, {4.0 * a, 4.0 * a}, 1.0);
    EXPECT_LE(scaled, a * base * (1.0 + 2.0 / 64) + 1.0);
  }
}

TEST(Comparison, Factors) {
  WellCoveringCertificate c;
  c.T = 10.0;
  const auto Q = tree_walk(2, {{0, 1}}, 1);
  WcTransform mono;
  mono.kind = WcTransform::Kind::monotone;
  mono.target = Q;
  mono.base = Q;
  const auto m = compare_wc(c, mono);
  EXPECT_DOUBLE_EQ(m.T, 90.0);
  EXPECT_EQ(m.method, WcMethod::comparison);
  ASSERT_EQ(m.provenance.size(), 1u);

  WcTransform lazy;
  lazy.kind = WcTransform::Kind::lazify;
  lazy.alpha = 0.5;
  lazy.base = Q;
  EXPECT_DOUBLE_EQ(compare_wc(c, lazy).T, 40.0);

  WcTransform scale;
  scale.alpha = 3.0;
  EXPECT_DOUBLE_EQ(compare_wc(c, scale).T, 30.0);
  EXPECT_EQ(compare_wc(compare_wc(c, scale), lazy).provenance.size(), 2u);

  Matrix other(2, 2);
  other << 0.5, 0.5, 0.25, 0.75;
  mono.target = StochasticKernel(other);
  try {
    compare_wc(c, mono);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidComparison);
  }
}

TEST(Bootstrap, SingleBlockIsMultipleOfPhi) {
  const WcProvider provider = [](const std::vector<double>& t, double B) -> std::optional<double> {
    const auto c = oracle_wc_time(WellCoveringQuery{kOne, t, B});
    return c ? std::optional<double>(c->T) : std::nullopt;
  };
  double prev = 0;
  for (double phi : {10.0, 100.0, 1000.0}) {
    const auto b = bootstrap_mixing_bound({phi}, {1.0}, {0}, 0.45, 0.6, provider, "oracle", PeresSousiConstants{});
    ASSERT_EQ(b.status, BoundStatus::ok);
    EXPECT_GE(b.value, 4.0 / 3.0 * 8 * phi);
    EXPECT_LE(b.value, 4.0 / 3.0 * (8 * phi + 2));
    EXPECT_GE(b.value, prev);
    prev = b.value;
  }
}

TEST(Concentration, HugeDeviationNeverHappens) {
  const ChainInstance c = pince_nez(8);
  const auto rows = concentration_audit(*c.kernel, *c.pi, c.partition, 0, 1, {50}, {10.0}, 1000, 3, 9.0, {0});
  ASSERT_EQ(rows.size(), 2u);   // both orientations
  for (const auto& r : rows) {
    EXPECT_EQ(r.empirical, 0.0);
    EXPECT_LE(r.wilson_hi, r.bound + 1e-2);
  }
  std::ostringstream out;
  write_concentration_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')).find("c,t,"), 0u);
}
