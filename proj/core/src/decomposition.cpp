#include "mixdecomp/decomposition.hpp"

#include "detail.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/rng.hpp"
#include "mixdecomp/tolerances.hpp"

#include <algorithm>
#include <numeric>

namespace mixdecomp {

StochasticKernel trace_kernel(const StochasticKernel& kernel, const StateSet& subset) {
  const Index n = kernel.size();
  require(!subset.empty(), Errc::InvalidParameter, "trace onto an empty set");
  StateSet a = subset;
  std::sort(a.begin(), a.end());
  require(std::adjacent_find(a.begin(), a.end()) == a.end(), Errc::InvalidParameter, "duplicate states in subset");
  require(a.front() >= 0 && a.back() < n, Errc::DimensionMismatch, "subset state out of range");
  const StateSet b = detail::complement(n, a);
  const auto na = static_cast<Index>(a.size());
  const auto nb = static_cast<Index>(b.size());

  Matrix kaa(na, na);
  for (Index r = 0; r < na; ++r)
    for (Index c = 0; c < na; ++c) kaa(r, c) = kernel(a[static_cast<std::size_t>(r)], a[static_cast<std::size_t>(c)]);
  if (nb > 0) {
    Matrix kab(na, nb), kba(nb, na);
    for (Index r = 0; r < na; ++r)
      for (Index c = 0; c < nb; ++c) kab(r, c) = kernel(a[static_cast<std::size_t>(r)], b[static_cast<std::size_t>(c)]);
    for (Index r = 0; r < nb; ++r)
      for (Index c = 0; c < na; ++c) kba(r, c) = kernel(b[static_cast<std::size_t>(r)], a[static_cast<std::size_t>(c)]);
    const Matrix g = detail::killed_generator(kernel, b);
    const Matrix excursion = detail::solve_checked(g, kba, Errc::SingularReturn, "return system (I - K_BB)");
    kaa.noalias() += kab * excursion;
  }
  std::vector<std::string> labels;
  if (!kernel.labels().empty())
    for (Index x : a) labels.push_back(kernel.labels()[static_cast<std::size_t>(x)]);
  return StochasticKernel::from_off_diagonal(std::move(kaa), std::move(labels));
}

StochasticKernel trace_kernel(const StochasticKernel& kernel, const StationaryDistribution& pi,
                              const Partition& partition, Index block) {
  require(pi.size() == kernel.size() && partition.n_states() == kernel.size(), Errc::DimensionMismatch,
          "kernel, pi and partition sizes differ");
  require(block >= 0 && block < partition.n_blocks(), Errc::InvalidPartition, "block index out of range");
  return trace_kernel(kernel, partition.members(block));
}

StochasticKernel projected_kernel(const StochasticKernel& kernel, const StationaryDistribution& pi,
                                  const Partition& partition) {
  require(pi.size() == kernel.size() && partition.n_states() == kernel.size(), Errc::DimensionMismatch,
          "kernel, pi and partition sizes differ");
  const Index nb = partition.n_blocks();
  const auto masses = partition.masses(pi);
  Matrix flow = Matrix::Zero(nb, nb);
  const auto& s = kernel.sparse();
  for (Index x = 0; x < kernel.size(); ++x)
    for (Index k = s.row_begin(x); k < s.row_end(x); ++k) {
      const Index y = s.cols[static_cast<std::size_t>(k)];
      flow(partition.block_of(x), partition.block_of(y)) += pi(x) * s.vals[static_cast<std::size_t>(k)];
    }
  for (Index i = 0; i < nb; ++i) {
    require(masses[static_cast<std::size_t>(i)] > 0.0, Errc::PreconditionViolated, "block with zero mass");
    flow.row(i) /= masses[static_cast<std::size_t>(i)];
  }
  return StochasticKernel::from_off_diagonal(std::move(flow));
}

StochasticKernel less_lazy_projection(const StochasticKernel& projected) {
  const Index n = projected.size();
  Matrix out = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double leave = projected.off_diagonal_mass(i);
    if (n > 1 && !(leave > 0.0)) fail(Errc::AbsorbingBlock, "block " + std::to_string(i) + " never leaves");
    for (Index j = 0; j < n; ++j)
      if (j != i) out(i, j) = projected(i, j) / (2.0 * leave);
  }
  return StochasticKernel::from_off_diagonal(std::move(out));
}

namespace {

void require_exit(const StochasticKernel& kernel, const Partition& partition, Index block) {
  require(block >= 0 && block < partition.n_blocks(), Errc::InvalidPartition, "block index out of range");
  require(partition.n_states() == kernel.size(), Errc::DimensionMismatch, "partition size differs from kernel");
  const StateSet outside = detail::complement(kernel.size(), partition.members(block));
  require(!outside.empty(), Errc::NoExit, "block covers the whole space");
  const auto reach = can_reach(kernel, outside);
  for (Index x : partition.members(block))
    require(reach[static_cast<std::size_t>(x)], Errc::NoExit,
            "state " + std::to_string(x) + " cannot leave block " + std::to_string(block));
}

Matrix block_subkernel(const StochasticKernel& kernel, const StateSet& members) {
  const auto m = static_cast<Index>(members.size());
  Matrix sub(m, m);
  for (Index r = 0; r < m; ++r)
    for (Index c = 0; c < m; ++c) sub(r, c) = kernel(members[static_cast<std::size_t>(r)], members[static_cast<std::size_t>(c)]);
  return sub;
}

}  // namespace

Matrix exit_block_distribution(const StochasticKernel& kernel, const Partition& partition, Index block) {
  require_exit(kernel, partition, block);
  const StateSet& members = partition.members(block);
  const auto m = static_cast<Index>(members.size());
  Matrix leave = Matrix::Zero(m, partition.n_blocks());
  const auto& s = kernel.sparse();
  for (Index r = 0; r < m; ++r) {
    const Index x = members[static_cast<std::size_t>(r)];
    for (Index k = s.row_begin(x); k < s.row_end(x); ++k) {
      const Index j = partition.block_of(s.cols[static_cast<std::size_t>(k)]);
      if (j != block) leave(r, j) += s.vals[static_cast<std::size_t>(k)];
    }
  }
  const Matrix g = detail::killed_generator(kernel, members);
  Matrix dist = detail::solve_checked(g, leave, Errc::NoExit, "escape system");
  for (Index r = 0; r < m; ++r) {
    dist.row(r) = dist.row(r).cwiseMax(0.0);
    dist.row(r) /= dist.row(r).sum();
  }
  return dist;
}

Vector escape_survival(const StochasticKernel& kernel, const Partition& partition, Index block, long t) {
  require_exit(kernel, partition, block);
  require(t >= 0, Errc::InvalidParameter, "negative time");
  Matrix base = block_subkernel(kernel, partition.members(block));
  Vector v = Vector::Ones(base.rows());
  for (long e = t; e > 0; e >>= 1) {
    if (e & 1) v = base * v;
    if (e > 1) base = base * base;
  }
  return v;
}

EscapeStatistics escape_analysis(const StochasticKernel& kernel, const Partition& partition, Index block,
                                 long horizon) {
  require_exit(kernel, partition, block);
  require(horizon >= 0, Errc::InvalidParameter, "negative horizon");
  EscapeStatistics out;
  out.block = block;
  out.members = partition.members(block);
  const auto m = static_cast<Index>(out.members.size());
  const Matrix g = detail::killed_generator(kernel, out.members);
  out.expected_escape = detail::solve_checked(g, Vector::Ones(m), Errc::NoExit, "escape-time system").col(0);
  const Matrix sub = block_subkernel(kernel, out.members);
  out.escape_tail = Matrix::Zero(horizon + 1, m);
  out.escape_tail.row(0).setOnes();
  for (long t = 1; t <= horizon; ++t) out.escape_tail.row(t) = (sub * out.escape_tail.row(t - 1).transpose()).transpose();
  out.exit_block_distribution = exit_block_distribution(kernel, partition, block);
  return out;
}

namespace {

double worst_hit(const StochasticKernel& kernel, const StateSet& target, Index& argmax) {
  const Vector h = expected_hitting_times(kernel, target);
  return h.maxCoeff(&argmax);
}

}  // namespace

AvgHitResult avg_hit_time(const StochasticKernel& kernel, const StationaryDistribution& pi,
                          const Partition& partition, double alpha, SubsetMode mode, long samples,
                          std::uint64_t seed) {
  require(alpha > 0.0 && alpha < 1.0, Errc::InvalidAlpha, "alpha must lie in (0,1)");
  const Index nb = partition.n_blocks();
  const auto masses = partition.masses(pi);
  const double need = alpha / 2.0;
  AvgHitResult out;

  auto consider = [&](const std::vector<Index>& blocks) {
    Index arg = -1;
    const double h = worst_hit(kernel, partition.union_of(blocks), arg);
    ++out.subsets_evaluated;
    if (!out.value || h > *out.value) {
      out.value = h;
      out.worst_blocks = blocks;
      out.worst_start = arg;
    }
  };

  if (mode == SubsetMode::exact) {
    require(nb <= kMaxExactSubsetBlocks, Errc::TooManyBlocks, "exact mode supports at most 20 blocks");
    // Hitting times only shrink as the target grows, so minimal qualifying
    // subsets attain the maximum; the others are skipped.
    const std::uint64_t total = std::uint64_t{1} << nb;
    std::uint64_t gray = 0;
    double mass = 0.0;
    for (std::uint64_t k = 1; k < total; ++k) {
      const int flip = __builtin_ctzll(k);
      gray ^= std::uint64_t{1} << flip;
      mass += ((gray >> flip) & 1U ? 1.0 : -1.0) * masses[static_cast<std::size_t>(flip)];
      if (mass < need - 1e-15) continue;
      std::vector<Index> blocks;
      bool minimal = true;
      for (Index i = 0; i < nb; ++i)
        if ((gray >> i) & 1U) {
          blocks.push_back(i);
          if (mass - masses[static_cast<std::size_t>(i)] >= need - 1e-15) minimal = false;
        }
      if (minimal) consider(blocks);
    }
    return out;
  }

  out.lower_bound_only = true;
  Rng rng(seed, 0x5a17);
  std::vector<Index> order(static_cast<std::size_t>(nb));
  std::iota(order.begin(), order.end(), Index{0});
  for (long s = 0; s < samples; ++s) {
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
    std::vector<Index> blocks;
    double mass = 0.0;
    for (Index b : order) {
      blocks.push_back(b);
      mass += masses[static_cast<std::size_t>(b)];
      if (mass >= need - 1e-15) break;
    }
    if (mass < need - 1e-15) continue;
    std::sort(blocks.begin(), blocks.end());
    consider(blocks);
  }
  return out;
}

DecompositionReport decompose(const StochasticKernel& kernel, const StationaryDistribution& pi,
                              const Partition& partition, long horizon) {
  DecompositionReport out{{}, projected_kernel(kernel, pi, partition), partition.masses(pi), {}, 0, false};
  for (Index i = 0; i < partition.n_blocks(); ++i) {
    StochasticKernel trace = trace_kernel(kernel, pi, partition, i);
    const auto& members = partition.members(i);
    Vector local(static_cast<Index>(members.size()));
    for (std::size_t k = 0; k < members.size(); ++k) local(static_cast<Index>(k)) = pi(members[k]);
    local /= local.sum();
    const auto tau = mixing_time(trace, StationaryDistribution(local), horizon);
    if (tau) {
      out.block_mixing_times.push_back(*tau);
      out.phi_max = std::max(out.phi_max, *tau);
    } else {
      out.block_mixing_times.push_back(-1);
      out.horizon_exceeded = true;
    }
    out.trace_kernels.push_back(std::move(trace));
  }
  return out;
}

}  // namespace mixdecomp
