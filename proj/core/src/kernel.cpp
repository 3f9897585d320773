#include "mixdecomp/kernel.hpp"

#include "detail.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/tolerances.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mixdecomp {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

SparseMatrix to_sparse(const StochasticKernel& kernel) {
  const auto& s = kernel.sparse();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(s.cols.size());
  for (Index x = 0; x < kernel.size(); ++x)
    for (Index k = s.row_begin(x); k < s.row_end(x); ++k)
      triplets.emplace_back(x, s.cols[static_cast<std::size_t>(k)], s.vals[static_cast<std::size_t>(k)]);
  SparseMatrix m(kernel.size(), kernel.size());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

std::vector<bool> bfs(const std::vector<std::vector<Index>>& adj, const StateSet& sources) {
  std::vector<bool> seen(adj.size(), false);
  std::vector<Index> stack;
  for (Index s : sources)
    if (!seen[static_cast<std::size_t>(s)]) {
      seen[static_cast<std::size_t>(s)] = true;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    const Index x = stack.back();
    stack.pop_back();
    for (Index y : adj[static_cast<std::size_t>(x)])
      if (!seen[static_cast<std::size_t>(y)]) {
        seen[static_cast<std::size_t>(y)] = true;
        stack.push_back(y);
      }
  }
  return seen;
}

std::vector<std::vector<Index>> support_graph(const StochasticKernel& kernel, bool reversed) {
  const auto& s = kernel.sparse();
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(kernel.size()));
  for (Index x = 0; x < kernel.size(); ++x)
    for (Index k = s.row_begin(x); k < s.row_end(x); ++k) {
      const Index y = s.cols[static_cast<std::size_t>(k)];
      if (reversed)
        adj[static_cast<std::size_t>(y)].push_back(x);
      else
        adj[static_cast<std::size_t>(x)].push_back(y);
    }
  return adj;
}

// Grassmann-Taksar-Heyman elimination: subtraction-free, so stationary
// weights many orders of magnitude apart keep their relative accuracy.
Vector gth_stationary(const Matrix& k) {
  const Index n = k.rows();
  Matrix a = k;
  for (Index m = n - 1; m >= 1; --m) {
    const double s = a.row(m).head(m).sum();
    if (!(s > 0.0)) fail(Errc::ReducibleKernel, "elimination found a closed class");
    a.col(m).head(m) /= s;
    a.topLeftCorner(m, m).noalias() += a.col(m).head(m) * a.row(m).head(m);
  }
  Vector pi(n);
  pi(0) = 1.0;
  for (Index j = 1; j < n; ++j) pi(j) = pi.head(j).dot(a.col(j).head(j));
  return pi / pi.sum();
}

Vector power_stationary(const StochasticKernel& kernel) {
  const SparseMatrix kt = to_sparse(kernel).transpose();
  const Index n = kernel.size();
  Vector pi = Vector::Constant(n, 1.0 / static_cast<double>(n));
  for (long it = 0; it < 50'000'000; ++it) {
    Vector next = 0.5 * (pi + kt * pi);
    next /= next.sum();
    const double delta = (next - pi).lpNorm<1>();
    pi.swap(next);
    if (delta < tol::kPowerIteration) return pi;
  }
  fail(Errc::AssertionFailed, "power iteration did not converge");
}

}  // namespace

StochasticKernel::StochasticKernel(Matrix rows, std::vector<std::string> labels) {
  const Index n = rows.rows();
  require(n >= 1 && rows.cols() == n, Errc::DimensionMismatch, "kernel must be a nonempty square matrix");
  require(n <= kMaxDenseStates, Errc::StateSpaceTooLarge, "dense kernels are limited to 50000 states");
  require(labels.empty() || static_cast<Index>(labels.size()) == n, Errc::DimensionMismatch,
          "label count differs from state count");
  auto data = std::make_shared<Data>();
  data->off_mass.assign(static_cast<std::size_t>(n), 0.0);
  data->sparse.offsets.reserve(static_cast<std::size_t>(n) + 1);
  data->sparse.offsets.push_back(0);
  for (Index x = 0; x < n; ++x) {
    double sum = 0.0;
    double off = 0.0;
    for (Index y = 0; y < n; ++y) {
      double& v = rows(x, y);
      if (!std::isfinite(v) || v < -tol::kStochasticity)
        fail(Errc::NotStochastic, "entry (" + std::to_string(x) + "," + std::to_string(y) + ") is negative or not finite");
      if (v < 0.0) v = 0.0;
      sum += v;
      if (y != x) off += v;
      if (v > 0.0) {
        data->sparse.cols.push_back(y);
        data->sparse.vals.push_back(v);
      }
    }
    if (std::abs(sum - 1.0) > tol::kStochasticity)
      fail(Errc::NotStochastic, "row " + std::to_string(x) + " sums to " + std::to_string(sum));
    data->off_mass[static_cast<std::size_t>(x)] = off;
    data->sparse.offsets.push_back(static_cast<Index>(data->sparse.cols.size()));
  }
  data->rows = std::move(rows);
  data->labels = std::move(labels);
  data_ = std::move(data);
}

StochasticKernel StochasticKernel::from_off_diagonal(Matrix rows, std::vector<std::string> labels) {
  for (Index x = 0; x < rows.rows(); ++x) {
    rows(x, x) = 0.0;
    const double off = rows.row(x).sum();
    require(off <= 1.0 + tol::kStochasticity, Errc::NotStochastic,
            "off-diagonal mass exceeds 1 in row " + std::to_string(x));
    rows(x, x) = std::max(0.0, 1.0 - off);
  }
  return StochasticKernel(std::move(rows), std::move(labels));
}

StationaryDistribution::StationaryDistribution(Vector weights) : weights_(std::move(weights)) {
  require(weights_.size() >= 1, Errc::DimensionMismatch, "empty distribution");
  for (Index x = 0; x < weights_.size(); ++x)
    require(std::isfinite(weights_(x)) && weights_(x) >= 0.0, Errc::PreconditionViolated,
            "distribution entries must be nonnegative");
  require(std::abs(weights_.sum() - 1.0) <= tol::kStochasticity, Errc::PreconditionViolated,
          "distribution must sum to 1");
}

double StationaryDistribution::mass(const StateSet& set) const {
  double m = 0.0;
  for (Index x : set) m += weights_(x);
  return m;
}

bool is_irreducible(const StochasticKernel& kernel) {
  const auto fwd = bfs(support_graph(kernel, false), {0});
  const auto bwd = bfs(support_graph(kernel, true), {0});
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

std::vector<bool> can_reach(const StochasticKernel& kernel, const StateSet& target) {
  return bfs(support_graph(kernel, true), target);
}

StationaryDistribution stationary_distribution(const StochasticKernel& kernel) {
  require(is_irreducible(kernel), Errc::ReducibleKernel, "support digraph is not strongly connected");
  Vector pi = kernel.size() <= kMaxDirectStationary ? gth_stationary(kernel.matrix()) : power_stationary(kernel);
  const double residual = (kernel.matrix().transpose() * pi - pi).lpNorm<1>();
  require(residual <= tol::kLinearResidual, Errc::AssertionFailed,
          "stationary residual " + std::to_string(residual));
  return StationaryDistribution(std::move(pi));
}

ReversibilityCheck check_reversible(const StochasticKernel& kernel, const StationaryDistribution& pi) {
  require(pi.size() == kernel.size(), Errc::DimensionMismatch, "pi length differs from kernel size");
  ReversibilityCheck out;
  const auto& s = kernel.sparse();
  for (Index x = 0; x < kernel.size(); ++x)
    for (Index k = s.row_begin(x); k < s.row_end(x); ++k) {
      const Index y = s.cols[static_cast<std::size_t>(k)];
      const double r = std::abs(pi(x) * kernel(x, y) - pi(y) * kernel(y, x));
      out.max_residual = std::max(out.max_residual, r);
    }
  out.reversible = out.max_residual <= tol::kDetailedBalance;
  return out;
}

StochasticKernel lazify(const StochasticKernel& kernel, double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, Errc::InvalidAlpha, "alpha must lie in (0,1]");
  Matrix m = alpha * kernel.matrix();
  m.diagonal().array() += 1.0 - alpha;
  return StochasticKernel(std::move(m), kernel.labels());
}

StochasticKernel time_reversal(const StochasticKernel& kernel, const StationaryDistribution& pi) {
  require(pi.size() == kernel.size(), Errc::DimensionMismatch, "pi length differs from kernel size");
  const Index n = kernel.size();
  Matrix r(n, n);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) r(x, y) = pi(y) * kernel(y, x) / pi(x);
  return StochasticKernel::from_off_diagonal(std::move(r), kernel.labels());
}

double tv_distance(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), Errc::DimensionMismatch, "distributions differ in length");
  return 0.5 * (a - b).lpNorm<1>();
}

MixingProfile mixing_profile(const StochasticKernel& kernel, const StationaryDistribution& pi,
                             long horizon, const MixingOptions& options) {
  require(horizon >= 1, Errc::InvalidParameter, "horizon must be positive");
  require(pi.size() == kernel.size(), Errc::DimensionMismatch, "pi length differs from kernel size");
  require(is_irreducible(kernel), Errc::ReducibleKernel, "support digraph is not strongly connected");
  const Index n = kernel.size();
  MixingProfile out;
  StateSet starts = options.starts;
  if (starts.empty()) {
    require(n <= kMaxAllStarts, Errc::PreconditionViolated,
            "more than 2000 states: supply an explicit start list");
    starts.resize(static_cast<std::size_t>(n));
    std::iota(starts.begin(), starts.end(), Index{0});
  } else {
    out.lower_bound_only = static_cast<Index>(starts.size()) < n;
  }
  std::vector<double> eps = options.epsilons;
  if (std::find(eps.begin(), eps.end(), 0.25) == eps.end()) eps.push_back(0.25);
  const double smallest = *std::min_element(eps.begin(), eps.end());

  const auto s = static_cast<Index>(starts.size());
  Matrix dist = Matrix::Zero(s, n);
  for (Index r = 0; r < s; ++r) dist(r, starts[static_cast<std::size_t>(r)]) = 1.0;
  const Eigen::RowVectorXd pirow = pi.weights().transpose();
  auto worst = [&]() {
    double d = 0.0;
    for (Index r = 0; r < s; ++r) d = std::max(d, 0.5 * (dist.row(r) - pirow).lpNorm<1>());
    return d;
  };

  const bool use_sparse = kernel.sparse().nnz() * 4 < n * n;
  const SparseMatrix ks = use_sparse ? to_sparse(kernel) : SparseMatrix();
  out.distances.push_back(worst());
  Matrix next(s, n);
  for (long t = 1; t <= horizon; ++t) {
    if (use_sparse)
      next.noalias() = dist * ks;
    else
      next.noalias() = dist * kernel.matrix();
    dist.swap(next);
    const double d = worst();
    out.distances.push_back(d);
    for (double e : eps)
      if (d < e && !out.epsilon_times.count(e)) out.epsilon_times[e] = t;
    if (options.stop_when_resolved && d < smallest) break;
  }
  if (auto it = out.epsilon_times.find(0.25); it != out.epsilon_times.end()) out.mixing_time = it->second;
  out.horizon_exceeded = !out.mixing_time.has_value();
  return out;
}

std::optional<long> mixing_time(const StochasticKernel& kernel, const StationaryDistribution& pi, long horizon) {
  MixingOptions opt;
  opt.epsilons = {0.25};
  return mixing_profile(kernel, pi, horizon, opt).mixing_time;
}

double relaxation_time(const StochasticKernel& kernel, const StationaryDistribution& pi) {
  const auto rev = check_reversible(kernel, pi);
  require(rev.reversible, Errc::NotReversible,
          "detailed balance residual " + std::to_string(rev.max_residual));
  const Index n = kernel.size();
  if (n == 1) return 1.0;
  const Vector sq = pi.weights().cwiseSqrt();
  Matrix sym(n, n);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) sym(x, y) = sq(x) * kernel(x, y) / sq(y);
  const Matrix half = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(half, Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, Errc::AssertionFailed, "eigensolver failed");
  const double lambda2 = solver.eigenvalues()(n - 2);
  const double gap = 1.0 - lambda2;
  require(gap > tol::kEigen, Errc::ReducibleKernel, "spectral gap vanishes");
  return 1.0 / gap;
}

Vector expected_hitting_times(const StochasticKernel& kernel, const StateSet& target) {
  const Index n = kernel.size();
  require(!target.empty(), Errc::InvalidParameter, "target set is empty");
  for (Index a : target) require(a >= 0 && a < n, Errc::DimensionMismatch, "target state out of range");
  const auto reach = can_reach(kernel, target);
  require(std::all_of(reach.begin(), reach.end(), [](bool b) { return b; }), Errc::UnreachableTarget,
          "target not reachable from every state");
  const StateSet rest = detail::complement(n, target);
  Vector h = Vector::Zero(n);
  if (rest.empty()) return h;
  const Matrix a = detail::killed_generator(kernel, rest);
  const Matrix sol = detail::solve_checked(a, Vector::Ones(static_cast<Index>(rest.size())),
                                           Errc::AssertionFailed, "hitting-time system");
  for (std::size_t k = 0; k < rest.size(); ++k) h(rest[k]) = sol(static_cast<Index>(k), 0);
  return h;
}

HittingTimeTable hitting_analysis(const StochasticKernel& kernel, const StateSet& target, long horizon) {
  require(horizon >= 0, Errc::InvalidParameter, "horizon must be nonnegative");
  HittingTimeTable out;
  out.target = target;
  out.expected = expected_hitting_times(kernel, target);
  if (horizon == 0) return out;

  const Index n = kernel.size();
  std::vector<bool> in_target(static_cast<std::size_t>(n), false);
  for (Index a : target) in_target[static_cast<std::size_t>(a)] = true;
  const auto& s = kernel.sparse();
  out.tail = Matrix::Zero(horizon + 1, n);
  for (Index x = 0; x < n; ++x) out.tail(0, x) = in_target[static_cast<std::size_t>(x)] ? 0.0 : 1.0;
  for (long t = 1; t <= horizon; ++t)
    for (Index x = 0; x < n; ++x) {
      if (in_target[static_cast<std::size_t>(x)]) continue;
      double acc = 0.0;
      for (Index k = s.row_begin(x); k < s.row_end(x); ++k)
        acc += s.vals[static_cast<std::size_t>(k)] * out.tail(t - 1, s.cols[static_cast<std::size_t>(k)]);
      out.tail(t, x) = acc;
    }
  out.max_tail.resize(static_cast<std::size_t>(horizon) + 1);
  for (long t = 0; t <= horizon; ++t) out.max_tail[static_cast<std::size_t>(t)] = out.tail.row(t).maxCoeff();
  for (long t = 1; t <= horizon; ++t) {
    const double base = out.max_tail[static_cast<std::size_t>(t)];
    double power = base;
    for (long k = 2; k * t <= horizon; ++k) {
      power *= base;
      const double lhs = out.max_tail[static_cast<std::size_t>(k * t)];
      if (lhs > power + tol::kSubmultiplicative)
        fail(Errc::AssertionFailed, "submultiplicative tail violated at t=" + std::to_string(t) +
                                        ", k=" + std::to_string(k));
    }
  }
  out.submultiplicative_checked = true;
  return out;
}

}  // namespace mixdecomp
