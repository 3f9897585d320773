#include "mixdecomp/simulation.hpp"

#include "mixdecomp/error.hpp"
#include "mixdecomp/tolerances.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace mixdecomp {

KernelSampler::KernelSampler(const StochasticKernel& kernel) {
  require(kernel.size() <= static_cast<Index>(UINT32_MAX), Errc::StateSpaceTooLarge, "state index exceeds 32 bits");
  const auto& s = kernel.sparse();
  rows_.resize(static_cast<std::size_t>(kernel.size()));
  for (Index x = 0; x < kernel.size(); ++x) {
    Row& row = rows_[static_cast<std::size_t>(x)];
    const Index b = s.row_begin(x), e = s.row_end(x);
    const auto k = static_cast<std::size_t>(e - b);
    for (Index q = b; q < e; ++q) row.targets.push_back(static_cast<std::uint32_t>(s.cols[static_cast<std::size_t>(q)]));
    if (k <= 8) {
      double acc = 0.0;
      for (Index q = b; q < e; ++q) {
        acc += s.vals[static_cast<std::size_t>(q)];
        row.cdf.push_back(acc);
      }
      continue;
    }
    // Vose alias construction.
    std::vector<double> scaled(k);
    double total = 0.0;
    for (std::size_t q = 0; q < k; ++q) total += s.vals[static_cast<std::size_t>(b) + q];
    for (std::size_t q = 0; q < k; ++q) scaled[q] = s.vals[static_cast<std::size_t>(b) + q] * static_cast<double>(k) / total;
    row.alias_prob.assign(k, 1.0);
    row.alias_index.resize(k);
    for (std::size_t q = 0; q < k; ++q) row.alias_index[q] = static_cast<std::uint32_t>(q);
    std::vector<std::size_t> small, large;
    for (std::size_t q = 0; q < k; ++q) (scaled[q] < 1.0 ? small : large).push_back(q);
    while (!small.empty() && !large.empty()) {
      const std::size_t l = small.back();
      small.pop_back();
      const std::size_t g = large.back();
      row.alias_prob[l] = scaled[l];
      row.alias_index[l] = static_cast<std::uint32_t>(g);
      scaled[g] = (scaled[g] + scaled[l]) - 1.0;
      if (scaled[g] < 1.0) {
        large.pop_back();
        small.push_back(g);
      }
    }
  }
}

State KernelSampler::step(State x, Rng& rng) const {
  const Row& row = rows_[static_cast<std::size_t>(x)];
  if (!row.cdf.empty()) {
    const double u = rng.uniform() * row.cdf.back();
    for (std::size_t q = 0; q + 1 < row.cdf.size(); ++q)
      if (u < row.cdf[q]) return row.targets[q];
    return row.targets.back();
  }
  const std::size_t k = row.targets.size();
  const std::size_t q = static_cast<std::size_t>(rng.below(k));
  return rng.uniform() < row.alias_prob[q] ? row.targets[q] : row.targets[row.alias_index[q]];
}

BlockMap block_map(const Partition& partition) {
  auto assignment = std::make_shared<std::vector<Index>>(partition.assignment());
  return {partition.n_blocks(), [assignment](State x) { return (*assignment)[static_cast<std::size_t>(x)]; }};
}

SimulationResult simulate(const Sampler& sampler, const BlockMap& blocks, State x0, long T, std::uint64_t seed,
                          std::uint64_t stream) {
  require(T >= 1, Errc::InvalidParameter, "simulation horizon must be positive");
  SimulationResult out;
  auto& rec = out.record;
  rec.T = T;
  rec.start = x0;
  rec.n_blocks = blocks.n_blocks;
  rec.kappa.assign(static_cast<std::size_t>(blocks.n_blocks), 0);
  rec.N.assign(static_cast<std::size_t>(blocks.n_blocks * blocks.n_blocks), 0);
  out.trajectory.states.reserve(static_cast<std::size_t>(T) + 1);
  require(x0 <= UINT32_MAX, Errc::StateSpaceTooLarge, "state index exceeds 32 bits");
  out.trajectory.states.push_back(static_cast<std::uint32_t>(x0));
  Rng rng(seed, stream);
  State x = x0;
  Index prev = blocks.of(x0);
  for (long s = 1; s <= T; ++s) {
    x = sampler.step(x, rng);
    const Index b = blocks.of(x);
    ++rec.kappa[static_cast<std::size_t>(b)];
    if (s < T) ++rec.N[static_cast<std::size_t>(prev * blocks.n_blocks + b)];
    prev = b;
    out.trajectory.states.push_back(static_cast<std::uint32_t>(x));
  }
  return out;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) fail(Errc::ParseError, "truncated trajectory file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

constexpr std::uint32_t kTrajectoryVersion = 1;

}  // namespace

void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory, std::uint32_t n_states) {
  require(!trajectory.states.empty(), Errc::InvalidParameter, "empty trajectory");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  out.write("MXDT", 4);
  put_u32(out, kTrajectoryVersion);
  put_u32(out, n_states);
  put_u32(out, static_cast<std::uint32_t>(trajectory.states.size() - 1));
  for (std::uint32_t s : trajectory.states) put_u32(out, s);
  if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

Trajectory read_trajectory(const std::filesystem::path& path, std::uint32_t* n_states) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MXDT", 4) != 0) fail(Errc::ParseError, "bad trajectory magic");
  if (get_u32(in) != kTrajectoryVersion) fail(Errc::ParseError, "unsupported trajectory version");
  const std::uint32_t n = get_u32(in);
  const std::uint32_t T = get_u32(in);
  if (n_states) *n_states = n;
  Trajectory t;
  t.states.resize(static_cast<std::size_t>(T) + 1);
  for (auto& s : t.states) s = get_u32(in);
  return t;
}

TailEstimate wilson(long successes, long reps, double z) {
  require(reps > 0 && successes >= 0 && successes <= reps, Errc::InvalidParameter, "bad Wilson counts");
  const double n = static_cast<double>(reps);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  TailEstimate e;
  e.point = p;
  e.reps = reps;
  e.wilson_low = std::clamp(center - half, 0.0, p);
  e.wilson_hi = std::clamp(center + half, p, 1.0);
  return e;
}

HittingEstimate empirical_hitting(const Sampler& sampler, const std::function<bool(State)>& in_target, State x0,
                                  long reps, std::uint64_t seed, long tail_threshold) {
  require(reps >= 100, Errc::InvalidParameter, "empirical hitting needs at least 100 replicates");
  std::vector<long> times(static_cast<std::size_t>(reps), 0);
  parallel_for(reps, [&](long r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    State x = x0;
    long t = 0;
    while (!in_target(x) && t < kHittingHorizonCap) {
      x = sampler.step(x, rng);
      ++t;
    }
    times[static_cast<std::size_t>(r)] = t;
  });
  HittingEstimate out;
  out.reps = reps;
  out.tail_threshold = tail_threshold;
  // Compensated summation keeps the mean independent of accumulation order.
  double sum = 0.0, comp = 0.0;
  long exceed = 0;
  for (long t : times) {
    const double y = static_cast<double>(t) - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    if (t >= kHittingHorizonCap) ++out.truncated;
    if (t > tail_threshold) ++exceed;
  }
  out.mean = sum / static_cast<double>(reps);
  double var = 0.0;
  for (long t : times) var += (static_cast<double>(t) - out.mean) * (static_cast<double>(t) - out.mean);
  var /= static_cast<double>(reps - 1);
  out.std_error = std::sqrt(var / static_cast<double>(reps));
  out.ci_low = out.mean - tol::kWilsonZ99 * out.std_error;
  out.ci_high = out.mean + tol::kWilsonZ99 * out.std_error;
  out.tail = wilson(exceed, reps);
  return out;
}

TailEstimate empirical_occupation_tail(const Sampler& sampler, const BlockMap& map, const std::vector<Index>& blocks,
                                       long T, long t, State x0, long reps, std::uint64_t seed) {
  require(reps >= 1, Errc::InvalidParameter, "need at least one replicate");
  require(T >= 0, Errc::InvalidParameter, "negative horizon");
  TailEstimate exact;
  exact.reps = reps;
  if (t <= 0) {
    exact.point = exact.wilson_low = exact.wilson_hi = 0.0;
    return exact;
  }
  if (t > T || blocks.empty()) {
    exact.point = exact.wilson_low = exact.wilson_hi = 1.0;
    return exact;
  }
  std::vector<char> hit(static_cast<std::size_t>(reps), 0);
  parallel_for(reps, [&](long r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    std::vector<long> kappa(static_cast<std::size_t>(map.n_blocks), 0);
    State x = x0;
    for (long s = 1; s <= T; ++s) {
      x = sampler.step(x, rng);
      ++kappa[static_cast<std::size_t>(map.of(x))];
    }
    bool all_low = true;
    for (Index b : blocks) all_low = all_low && kappa[static_cast<std::size_t>(b)] < t;
    hit[static_cast<std::size_t>(r)] = all_low ? 1 : 0;
  });
  long count = 0;
  for (char h : hit) count += h;
  return wilson(count, reps);
}

unsigned thread_count() {
  if (const char* env = std::getenv("MIXDECOMP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for(long tasks, const std::function<void(long)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<long>(thread_count(), std::max(tasks, 1L)));
  if (workers <= 1) {
    for (long k = 0; k < tasks; ++k) body(k);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (long k; (k = next.fetch_add(1)) < tasks;) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = tasks;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mixdecomp
