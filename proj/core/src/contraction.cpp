#include "mixdecomp/contraction.hpp"

#include "mixdecomp/decomposition.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/rng.hpp"
#include "mixdecomp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mixdecomp {

std::string coverage_name(Coverage coverage) {
  return coverage == Coverage::exact_all_pairs ? "exact-all-pairs" : "sampled";
}

Matrix exit_distributions(const StochasticKernel& kernel, const Partition& partition) {
  require(kernel.size() == partition.n_states(), Errc::DimensionMismatch, "partition does not match kernel");
  const Index n = partition.n_blocks();
  Matrix out = Matrix::Zero(kernel.size(), n);
  for (Index b = 0; b < n; ++b) {
    const Matrix exits = exit_block_distribution(kernel, partition, b);
    const StateSet& members = partition.members(b);
    for (std::size_t r = 0; r < members.size(); ++r) {
      out.row(members[r]) = 0.5 * exits.row(static_cast<Index>(r));
      out(members[r], b) += 0.5;
    }
  }
  return out;
}

Vector exit_distribution(const StochasticKernel& kernel, const Partition& partition, Index x) {
  require(x >= 0 && x < kernel.size(), Errc::InvalidParameter, "state out of range");
  const Index b = partition.block_of(x);
  const Matrix exits = exit_block_distribution(kernel, partition, b);
  const StateSet& members = partition.members(b);
  const auto r = std::find(members.begin(), members.end(), x) - members.begin();
  Vector mu = 0.5 * exits.row(static_cast<Index>(r)).transpose();
  mu(b) += 0.5;
  return mu;
}

std::vector<double> contraction_alpha_grid() {
  std::set<double> grid;
  for (int k = 0; k <= 12; ++k)
    for (int m = 1; m <= 16; ++m) {
      const double a = 1.0 - std::ldexp(1.0, -k) / m;
      if (a > 0.0) grid.insert(a);
    }
  for (int u = 1; u <= 256; ++u) grid.insert(u / 256.0);
  return {grid.begin(), grid.end()};
}

double beta_for_alpha(const std::vector<PairEvidence>& evidence, double alpha) {
  double beta = 0.0;
  for (const auto& e : evidence) beta = std::max(beta, e.w - (1.0 - alpha) * e.d);
  return beta;
}

double max_violation(const ContractionEstimate& estimate) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& e : estimate.pair_evidence)
    worst = std::max(worst, e.w - (1.0 - estimate.alpha) * e.d - estimate.beta);
  return worst;
}

ContractionEstimate estimate_contraction(const StochasticKernel& kernel, const Partition& partition,
                                         const BlockMetric& metric, long pair_budget, std::uint64_t seed) {
  const Index n = partition.n_blocks();
  require(metric.size() == n, Errc::DimensionMismatch, "metric must cover every block");
  require(pair_budget >= n, Errc::InvalidParameter, "pair budget must be at least the block count");
  const Matrix mu = exit_distributions(kernel, partition);
  const Index S = kernel.size();

  std::vector<std::pair<Index, Index>> pairs;
  ContractionEstimate est;
  est.D_max = metric.D_max;
  if (static_cast<double>(S) * static_cast<double>(S) <= kMaxExactPairs) {
    est.coverage = Coverage::exact_all_pairs;
    for (Index x = 0; x < S; ++x)
      for (Index y = x + 1; y < S; ++y) pairs.emplace_back(x, y);
  } else {
    est.coverage = Coverage::sampled;
    Rng rng(seed, 0xc0);
    const long strata = n * (n + 1) / 2;
    const long per = std::max<long>(1, (pair_budget + strata - 1) / strata);
    for (Index i = 0; i < n; ++i)
      for (Index j = i; j < n; ++j) {
        const StateSet& A = partition.members(i);
        const StateSet& B = partition.members(j);
        for (long k = 0; k < per; ++k)
          pairs.emplace_back(A[rng.below(A.size())], B[rng.below(B.size())]);
      }
  }

  est.pair_evidence.resize(pairs.size());
  parallel_for(static_cast<long>(pairs.size()), [&](long k) {
    const auto [x, y] = pairs[static_cast<std::size_t>(k)];
    PairEvidence& e = est.pair_evidence[static_cast<std::size_t>(k)];
    e.x = x;
    e.y = y;
    e.i = partition.block_of(x);
    e.j = partition.block_of(y);
    e.d = metric.d(e.i, e.j);
    e.w = wasserstein(mu.row(x).transpose(), mu.row(y).transpose(), metric);
  });

  double best = -std::numeric_limits<double>::infinity();
  for (double a : contraction_alpha_grid()) {
    const double b = beta_for_alpha(est.pair_evidence, a);
    if (a - 2.0 * b > best) {
      best = a - 2.0 * b;
      est.alpha = a;
      est.beta = b;
    }
  }
  for (const auto& e : est.pair_evidence)
    if (e.w - (1.0 - est.alpha) * e.d >= est.beta) est.worst_pair = e;
  est.certified = est.coverage == Coverage::exact_all_pairs && est.beta < est.alpha / 2.0 &&
                  max_violation(est) <= 1e-9;
  return est;
}

OccupationRegularity occupation_regularity(const StochasticKernel& kernel, const Partition& partition, double a1,
                                           double a2, double phi_max, Index n) {
  require(a1 >= 0.0 && a2 >= 0.0 && phi_max >= 0.0 && n >= 1, Errc::InvalidParameter,
          "regularity parameters must be nonnegative");
  const double logn = std::log(static_cast<double>(std::max<Index>(n, 2)));
  const double h1 = a1 * phi_max * logn;
  const double h2 = a2 * phi_max * logn;
  constexpr double kCap = 4.611686018427387904e18;   // 2^62
  require(h1 <= kCap && h2 <= kCap, Errc::HorizonOverflow, "escape threshold exceeds 2^62 steps");
  OccupationRegularity out;
  // tau_esc is an integer, so P[tau > h] = P[tau > floor(h)].
  out.threshold1 = static_cast<long>(std::floor(h1));
  out.threshold2 = static_cast<long>(std::floor(h2));
  double min1 = 1.0, max2 = 0.0;
  for (Index b = 0; b < partition.n_blocks(); ++b) {
    min1 = std::min(min1, escape_survival(kernel, partition, b, out.threshold1).minCoeff());
    max2 = std::max(max2, escape_survival(kernel, partition, b, out.threshold2).maxCoeff());
  }
  out.delta1 = min1;
  out.delta2 = 1.0 - max2;
  out.verified1 = out.delta1 > 0.0;
  out.verified2 = out.delta2 > 0.0;
  return out;
}

}  // namespace mixdecomp
