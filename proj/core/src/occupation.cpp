#include "mixdecomp/error.hpp"
#include "mixdecomp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mixdecomp {

namespace {

// Round a probability up to the nearest float so tabulated values stay upper bounds.
float round_up(double v) {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) < v) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return std::min(f, 1.0f);
}

std::vector<char> block_indicator(const Partition& partition, Index block) {
  std::vector<char> in(static_cast<std::size_t>(partition.n_states()), 0);
  for (Index x : partition.members(block)) in[static_cast<std::size_t>(x)] = 1;
  return in;
}

}  // namespace

// g_r(x, c) = P_x[#visits to the block in steps 1..r < c]
//   g_r(x, c) = sum_y K(x, y) g_{r-1}(y, c - 1{y in block}),  g(., 0) = 0, g_0(., c >= 1) = 1.
Vector exact_occupation_tail(const StochasticKernel& kernel, const Partition& partition, Index block, long T,
                             long t) {
  require(partition.n_states() == kernel.size(), Errc::DimensionMismatch, "partition size differs from kernel");
  require(block >= 0 && block < partition.n_blocks(), Errc::InvalidPartition, "block index out of range");
  require(T >= 0, Errc::InvalidParameter, "negative horizon");
  const Index n = kernel.size();
  if (t <= 0) return Vector::Zero(n);
  if (t > T) return Vector::Ones(n);
  require(static_cast<double>(n) * static_cast<double>(t + 1) <= kMaxProductSpace, Errc::ProductSpaceTooLarge,
          "state x counter space too large");
  const auto in = block_indicator(partition, block);
  const auto w = static_cast<std::size_t>(t + 1);
  std::vector<double> g(static_cast<std::size_t>(n) * w, 1.0), h(g.size(), 1.0);
  for (Index x = 0; x < n; ++x) g[static_cast<std::size_t>(x) * w] = h[static_cast<std::size_t>(x) * w] = 0.0;
  const auto& s = kernel.sparse();
  for (long r = 1; r <= T; ++r) {
    const auto top = static_cast<std::size_t>(std::min<long>(r, t));
    for (Index x = 0; x < n; ++x) {
      double* out = &h[static_cast<std::size_t>(x) * w];
      std::fill(out + 1, out + top + 1, 0.0);
      for (Index k = s.row_begin(x); k < s.row_end(x); ++k) {
        const auto y = static_cast<std::size_t>(s.cols[static_cast<std::size_t>(k)]);
        const double p = s.vals[static_cast<std::size_t>(k)];
        const double* src = &g[y * w] - (in[y] ? 1 : 0);
        for (std::size_t c = 1; c <= top; ++c) out[c] += p * src[c];
      }
    }
    std::swap(g, h);
  }
  Vector out(n);
  for (Index x = 0; x < n; ++x) out(x) = std::clamp(g[static_cast<std::size_t>(x) * w + static_cast<std::size_t>(t)], 0.0, 1.0);
  return out;
}

Vector exact_joint_occupation_tail(const StochasticKernel& kernel, const Partition& partition,
                                   const std::vector<Index>& blocks, long T, long t) {
  require(partition.n_states() == kernel.size(), Errc::DimensionMismatch, "partition size differs from kernel");
  require(T >= 0, Errc::InvalidParameter, "negative horizon");
  const Index n = kernel.size();
  if (t <= 0) return Vector::Zero(n);
  if (t > T || blocks.empty()) return Vector::Ones(n);
  std::vector<Index> slot(static_cast<std::size_t>(partition.n_blocks()), -1);
  for (std::size_t q = 0; q < blocks.size(); ++q) {
    const Index b = blocks[q];
    require(b >= 0 && b < partition.n_blocks(), Errc::InvalidPartition, "block index out of range");
    require(slot[static_cast<std::size_t>(b)] < 0, Errc::InvalidParameter, "duplicate block in set");
    slot[static_cast<std::size_t>(b)] = static_cast<Index>(q);
  }
  const auto q = blocks.size();
  const double counters = std::pow(static_cast<double>(t + 1), static_cast<double>(q));
  require(static_cast<double>(n) * counters <= kMaxProductSpace, Errc::ProductSpaceTooLarge,
          "state x counter space too large");
  const auto w = static_cast<std::size_t>(counters);
  // Counter c is the mixed-radix vector of remaining allowances; any zero digit means failure.
  std::vector<std::size_t> stride(q);
  for (std::size_t d = 0, st = 1; d < q; ++d, st *= static_cast<std::size_t>(t + 1)) stride[d] = st;
  std::vector<char> alive(w, 1);
  for (std::size_t c = 0; c < w; ++c)
    for (std::size_t d = 0; d < q; ++d)
      if ((c / stride[d]) % static_cast<std::size_t>(t + 1) == 0) alive[c] = 0;
  std::vector<double> g(static_cast<std::size_t>(n) * w), h(g.size());
  for (Index x = 0; x < n; ++x)
    for (std::size_t c = 0; c < w; ++c) g[static_cast<std::size_t>(x) * w + c] = alive[c];
  const auto& s = kernel.sparse();
  for (long r = 1; r <= T; ++r) {
    std::fill(h.begin(), h.end(), 0.0);
    for (Index x = 0; x < n; ++x) {
      double* out = &h[static_cast<std::size_t>(x) * w];
      for (Index k = s.row_begin(x); k < s.row_end(x); ++k) {
        const auto y = static_cast<std::size_t>(s.cols[static_cast<std::size_t>(k)]);
        const double p = s.vals[static_cast<std::size_t>(k)];
        const Index sl = slot[static_cast<std::size_t>(partition.block_of(static_cast<Index>(y)))];
        const std::size_t shift = sl >= 0 ? stride[static_cast<std::size_t>(sl)] : 0;
        const double* src = &g[y * w];
        for (std::size_t c = 0; c < w; ++c)
          if (alive[c]) out[c] += p * src[c - shift];
      }
    }
    std::swap(g, h);
  }
  std::size_t full = 0;
  for (std::size_t d = 0; d < q; ++d) full += static_cast<std::size_t>(t) * stride[d];
  Vector out(n);
  for (Index x = 0; x < n; ++x) out(x) = std::clamp(g[static_cast<std::size_t>(x) * w + full], 0.0, 1.0);
  return out;
}

ExactOccupationTails::ExactOccupationTails(const StochasticKernel& kernel, const Partition& partition,
                                           std::vector<Index> blocks, long T_cap)
    : T_cap_(T_cap), blocks_(std::move(blocks)) {
  require(partition.n_states() == kernel.size(), Errc::DimensionMismatch, "partition size differs from kernel");
  require(T_cap >= 1, Errc::InvalidParameter, "tabulation horizon must be positive");
  const Index n = kernel.size();
  const long C = T_cap + 1;
  require(static_cast<double>(n) * static_cast<double>(C + 1) <= 4.0 * kMaxProductSpace, Errc::ProductSpaceTooLarge,
          "state x counter space too large");
  for (long c = 1; c <= std::min<long>(128, C); ++c) grid_.push_back(c);
  while (grid_.back() < C) grid_.push_back(std::min<long>(C, static_cast<long>(std::ceil(grid_.back() * 1.01))));

  const auto w = static_cast<std::size_t>(C + 1);
  const auto& s = kernel.sparse();
  for (Index block : blocks_) {
    require(block >= 0 && block < partition.n_blocks(), Errc::InvalidPartition, "block index out of range");
    const auto in = block_indicator(partition, block);
    std::vector<double> g(static_cast<std::size_t>(n) * w, 1.0), h(g.size(), 1.0);
    for (Index x = 0; x < n; ++x) g[static_cast<std::size_t>(x) * w] = h[static_cast<std::size_t>(x) * w] = 0.0;
    std::vector<float> table(static_cast<std::size_t>(T_cap + 1) * grid_.size(), 1.0f);
    for (long r = 1; r <= T_cap; ++r) {
      const auto top = static_cast<std::size_t>(std::min<long>(r, C));
      for (Index x = 0; x < n; ++x) {
        double* out = &h[static_cast<std::size_t>(x) * w];
        std::fill(out + 1, out + top + 1, 0.0);
        for (Index k = s.row_begin(x); k < s.row_end(x); ++k) {
          const auto y = static_cast<std::size_t>(s.cols[static_cast<std::size_t>(k)]);
          const double p = s.vals[static_cast<std::size_t>(k)];
          const double* src = &g[y * w] - (in[y] ? 1 : 0);
          for (std::size_t c = 1; c <= top; ++c) out[c] += p * src[c];
        }
      }
      std::swap(g, h);
      float* row = &table[static_cast<std::size_t>(r) * grid_.size()];
      for (std::size_t k = 0; k < grid_.size(); ++k) {
        const auto c = static_cast<std::size_t>(grid_[k]);
        if (c > top) break;
        double worst = 0.0;
        for (Index x = 0; x < n; ++x) worst = std::max(worst, g[static_cast<std::size_t>(x) * w + c]);
        row[k] = round_up(worst);
      }
    }
    table_.push_back(std::move(table));
  }
}

double ExactOccupationTails::tail(Index block, long T, long t) {
  if (t <= 0) return 0.0;
  if (t > T || T > T_cap_) return 1.0;
  const auto it = std::find(blocks_.begin(), blocks_.end(), block);
  require(it != blocks_.end(), Errc::InvalidParameter, "block was not tabulated");
  const auto k = static_cast<std::size_t>(std::lower_bound(grid_.begin(), grid_.end(), t) - grid_.begin());
  if (k >= grid_.size()) return 1.0;
  return table_[static_cast<std::size_t>(it - blocks_.begin())][static_cast<std::size_t>(T) * grid_.size() + k];
}

double ExactOccupationTails::joint_tail(const std::vector<Index>& blocks, long T, long t) {
  // The intersection is no likelier than any one event; untabulated blocks are skipped.
  double best = 1.0;
  for (Index b : blocks)
    if (std::find(blocks_.begin(), blocks_.end(), b) != blocks_.end()) best = std::min(best, tail(b, T, t));
  return best;
}

McOccupationTails::McOccupationTails(std::shared_ptr<const Sampler> sampler, BlockMap map, std::vector<State> starts,
                                     long reps, std::uint64_t seed)
    : sampler_(std::move(sampler)), map_(std::move(map)), starts_(std::move(starts)), reps_(reps), seed_(seed) {
  require(sampler_ != nullptr, Errc::InvalidParameter, "null sampler");
  require(!starts_.empty(), Errc::InvalidParameter, "empty start list");
  require(reps_ >= 1, Errc::InvalidParameter, "need at least one replicate");
}

std::string McOccupationTails::provenance() const {
  return "mc(reps=" + std::to_string(reps_) + ",seed=" + std::to_string(seed_) + ")";
}

void McOccupationTails::ensure(long T) {
  if (!checkpoints_.empty() && checkpoints_.back().T == T) return;
  joint_keys_.clear();
  joint_sorted_.clear();
  for (auto it = checkpoints_.begin(); it != checkpoints_.end(); ++it)
    if (it->T == T) {
      std::rotate(it, it + 1, checkpoints_.end());
      return;
    }
  const auto nb = static_cast<std::size_t>(map_.n_blocks);
  const std::size_t paths = starts_.size() * static_cast<std::size_t>(reps_);

  // Resume from the longest checkpoint not beyond T.
  const Checkpoint* base = nullptr;
  for (const auto& c : checkpoints_)
    if (c.T <= T && (base == nullptr || c.T > base->T)) base = &c;
  Checkpoint next;
  next.T = T;
  if (base != nullptr) {
    next.x = base->x;
    next.rng = base->rng;
    next.kappa = base->kappa;
  } else {
    next.x.resize(paths);
    next.kappa.assign(paths * nb, 0);
    next.rng.reserve(paths);
    for (std::size_t p = 0; p < paths; ++p) {
      // Stream depends only on (start, rep), so every T replays the same paths.
      next.rng.emplace_back(seed_, static_cast<std::uint64_t>(p));
      next.x[p] = starts_[p / static_cast<std::size_t>(reps_)];
    }
  }
  const long from = base != nullptr ? base->T : 0;
  parallel_for(static_cast<long>(paths), [&](long task) {
    const auto p = static_cast<std::size_t>(task);
    Rng& rng = next.rng[p];
    std::uint32_t* k = &next.kappa[p * nb];
    State x = next.x[p];
    for (long s = from + 1; s <= T; ++s) {
      x = sampler_->step(x, rng);
      ++k[static_cast<std::size_t>(map_.of(x))];
    }
    next.x[p] = x;
  });

  if (checkpoints_.size() >= kMaxCheckpoints) checkpoints_.erase(checkpoints_.begin());
  checkpoints_.push_back(std::move(next));
}

double McOccupationTails::tail(Index block, long T, long t) {
  // A single block is a one-element joint query; that path caches sorted counts.
  return joint_tail({block}, T, t);
}

double McOccupationTails::joint_tail(const std::vector<Index>& blocks, long T, long t) {
  if (t <= 0) return 0.0;
  if (t > T || blocks.empty()) return 1.0;
  ensure(T);
  std::vector<Index> key = blocks;
  std::sort(key.begin(), key.end());
  auto it = std::find(joint_keys_.begin(), joint_keys_.end(), key);
  std::size_t slot;
  if (it == joint_keys_.end()) {
    const auto nb = static_cast<std::size_t>(map_.n_blocks);
    const auto& kappa = checkpoints_.back().kappa;
    std::vector<std::uint32_t> sorted(starts_.size() * static_cast<std::size_t>(reps_));
    for (std::size_t si = 0; si < starts_.size(); ++si) {
      for (long r = 0; r < reps_; ++r) {
        const std::size_t row = si * static_cast<std::size_t>(reps_) + static_cast<std::size_t>(r);
        std::uint32_t m = 0;
        for (Index b : key) {
          require(b >= 0 && b < map_.n_blocks, Errc::InvalidPartition, "block index out of range");
          m = std::max(m, kappa[row * nb + static_cast<std::size_t>(b)]);
        }
        sorted[row] = m;
      }
      auto first = sorted.begin() + static_cast<std::ptrdiff_t>(si * static_cast<std::size_t>(reps_));
      std::sort(first, first + reps_);
    }
    joint_keys_.push_back(std::move(key));
    joint_sorted_.push_back(std::move(sorted));
    slot = joint_keys_.size() - 1;
  } else {
    slot = static_cast<std::size_t>(it - joint_keys_.begin());
  }
  const auto& sorted = joint_sorted_[slot];
  double worst = 0.0;
  for (std::size_t si = 0; si < starts_.size(); ++si) {
    auto first = sorted.begin() + static_cast<std::ptrdiff_t>(si * static_cast<std::size_t>(reps_));
    const long count = std::lower_bound(first, first + reps_, static_cast<std::uint32_t>(t)) - first;
    worst = std::max(worst, wilson(count, reps_).wilson_hi);
  }
  return worst;
}

}  // namespace mixdecomp
