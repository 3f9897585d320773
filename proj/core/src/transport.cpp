#include "mixdecomp/transport.hpp"

#include "mixdecomp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mixdecomp {

BlockMetric BlockMetric::from_matrix(Matrix d) {
  const Index n = d.rows();
  require(n >= 1 && d.cols() == n, Errc::InvalidMetric, "metric must be a nonempty square matrix");
  double D = 1.0;
  for (Index i = 0; i < n; ++i) {
    require(d(i, i) == 0.0, Errc::InvalidMetric, "metric diagonal must be zero");
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      require(std::isfinite(d(i, j)) && d(i, j) >= 1.0, Errc::InvalidMetric, "off-diagonal distances must be >= 1");
      require(d(i, j) == d(j, i), Errc::InvalidMetric, "metric must be symmetric");
      D = std::max(D, d(i, j));
    }
  }
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        require(d(i, j) <= d(i, k) + d(k, j) + 1e-12, Errc::InvalidMetric, "triangle inequality fails");
  return BlockMetric{std::move(d), D};
}

BlockMetric BlockMetric::discrete(Index n) {
  Matrix d = Matrix::Ones(n, n);
  d.diagonal().setZero();
  return from_matrix(std::move(d));
}

BlockMetric BlockMetric::path(Index n) {
  Matrix d(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) d(i, j) = static_cast<double>(std::abs(i - j));
  return from_matrix(std::move(d));
}

BlockMetric BlockMetric::hamming(int bits) {
  require(bits >= 1 && bits <= 12, Errc::InvalidMetric, "hamming metric supports 1..12 bits");
  const Index n = Index{1} << bits;
  Matrix d(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) d(i, j) = static_cast<double>(__builtin_popcountll(static_cast<unsigned long long>(i ^ j)));
  return BlockMetric{std::move(d), static_cast<double>(bits)};
}

namespace {

constexpr double kZero = 1e-15;

// Min-cost transport from supplies a (rows) to demands b (columns).
Matrix solve_bipartite(const std::vector<double>& a, const std::vector<double>& b, const Matrix& cost) {
  const auto p = static_cast<Index>(a.size());
  const auto q = static_cast<Index>(b.size());
  Matrix flow = Matrix::Zero(p, q);
  std::vector<double> supply = a, demand = b;
  std::vector<double> hL(static_cast<std::size_t>(p), 0.0), hR(static_cast<std::size_t>(q));
  for (Index j = 0; j < q; ++j) hR[static_cast<std::size_t>(j)] = p > 0 ? cost.col(j).minCoeff() : 0.0;

  const double inf = std::numeric_limits<double>::infinity();
  const Index V = p + q;   // nodes: left 0..p-1, right p..p+q-1
  std::vector<double> dist(static_cast<std::size_t>(V));
  std::vector<Index> prev(static_cast<std::size_t>(V));
  std::vector<char> done(static_cast<std::size_t>(V));
  auto pot = [&](Index v) { return v < p ? hL[static_cast<std::size_t>(v)] : hR[static_cast<std::size_t>(v - p)]; };

  for (;;) {
    bool any_supply = false, any_demand = false;
    for (double s : supply) any_supply |= s > kZero;
    for (double d : demand) any_demand |= d > kZero;
    if (!any_supply || !any_demand) break;

    std::fill(dist.begin(), dist.end(), inf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (Index i = 0; i < p; ++i)
      if (supply[static_cast<std::size_t>(i)] > kZero) dist[static_cast<std::size_t>(i)] = 0.0;
    Index target = -1;
    for (;;) {
      Index u = -1;
      for (Index v = 0; v < V; ++v)
        if (!done[static_cast<std::size_t>(v)] && dist[static_cast<std::size_t>(v)] < inf &&
            (u < 0 || dist[static_cast<std::size_t>(v)] < dist[static_cast<std::size_t>(u)]))
          u = v;
      if (u < 0) break;
      done[static_cast<std::size_t>(u)] = 1;
      if (u >= p && demand[static_cast<std::size_t>(u - p)] > kZero) {
        target = u;
        break;
      }
      const double du = dist[static_cast<std::size_t>(u)];
      if (u < p) {
        for (Index j = 0; j < q; ++j) {
          const Index v = p + j;
          if (done[static_cast<std::size_t>(v)]) continue;
          const double rc = std::max(0.0, cost(u, j) + pot(u) - pot(v));
          if (du + rc < dist[static_cast<std::size_t>(v)]) {
            dist[static_cast<std::size_t>(v)] = du + rc;
            prev[static_cast<std::size_t>(v)] = u;
          }
        }
      } else {
        const Index j = u - p;
        for (Index i = 0; i < p; ++i) {
          if (done[static_cast<std::size_t>(i)] || flow(i, j) <= kZero) continue;
          const double rc = std::max(0.0, -cost(i, j) + pot(u) - pot(i));
          if (du + rc < dist[static_cast<std::size_t>(i)]) {
            dist[static_cast<std::size_t>(i)] = du + rc;
            prev[static_cast<std::size_t>(i)] = u;
          }
        }
      }
    }
    require(target >= 0, Errc::AssertionFailed, "transport solver found no augmenting path");
    const double dt = dist[static_cast<std::size_t>(target)];
    for (Index v = 0; v < V; ++v) {
      const double shift = std::min(dist[static_cast<std::size_t>(v)], dt);
      if (v < p)
        hL[static_cast<std::size_t>(v)] += shift;
      else
        hR[static_cast<std::size_t>(v - p)] += shift;
    }
    // Bottleneck along the path.
    double amount = demand[static_cast<std::size_t>(target - p)];
    Index v = target;
    while (prev[static_cast<std::size_t>(v)] >= 0) {
      const Index u = prev[static_cast<std::size_t>(v)];
      if (u >= p) amount = std::min(amount, flow(v, u - p));   // reverse edge right -> left
      v = u;
    }
    amount = std::min(amount, supply[static_cast<std::size_t>(v)]);
    const Index source = v;
    v = target;
    while (prev[static_cast<std::size_t>(v)] >= 0) {
      const Index u = prev[static_cast<std::size_t>(v)];
      if (u < p)
        flow(u, v - p) += amount;
      else
        flow(v, u - p) = std::max(0.0, flow(v, u - p) - amount);
      v = u;
    }
    supply[static_cast<std::size_t>(source)] -= amount;
    demand[static_cast<std::size_t>(target - p)] -= amount;
  }
  return flow;
}

void validate_distribution(const Vector& v, const char* name) {
  for (Index i = 0; i < v.size(); ++i)
    require(v(i) >= -1e-12 && std::isfinite(v(i)), Errc::InvalidParameter, std::string(name) + " has a negative entry");
  require(std::abs(v.sum() - 1.0) <= 1e-9, Errc::InvalidParameter, std::string(name) + " does not sum to 1");
}

}  // namespace

TransportPlan optimal_transport(const Vector& mu, const Vector& nu, const Matrix& cost) {
  require(mu.size() == nu.size() && cost.rows() == mu.size() && cost.cols() == nu.size(), Errc::DimensionMismatch,
          "transport inputs disagree in size");
  validate_distribution(mu, "mu");
  validate_distribution(nu, "nu");
  std::vector<Index> rows, cols;
  std::vector<double> a, b;
  for (Index i = 0; i < mu.size(); ++i)
    if (mu(i) > kZero) {
      rows.push_back(i);
      a.push_back(std::max(0.0, mu(i)));
    }
  for (Index j = 0; j < nu.size(); ++j)
    if (nu(j) > kZero) {
      cols.push_back(j);
      b.push_back(std::max(0.0, nu(j)));
    }
  require(static_cast<Index>(rows.size()) <= kMaxTransportSupport && static_cast<Index>(cols.size()) <= kMaxTransportSupport,
          Errc::StateSpaceTooLarge, "transport support exceeds 2000 points");
  Matrix sub(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      sub(static_cast<Index>(r), static_cast<Index>(c)) = cost(rows[r], cols[c]);
  const Matrix flow = solve_bipartite(a, b, sub);
  TransportPlan plan;
  plan.coupling = Matrix::Zero(mu.size(), nu.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double f = flow(static_cast<Index>(r), static_cast<Index>(c));
      plan.coupling(rows[r], cols[c]) = f;
      plan.cost += f * cost(rows[r], cols[c]);
    }
  return plan;
}

double wasserstein(const Vector& mu, const Vector& nu, const BlockMetric& metric) {
  require(mu.size() == metric.size() && nu.size() == metric.size(), Errc::DimensionMismatch,
          "distributions and metric disagree in size");
  validate_distribution(mu, "mu");
  validate_distribution(nu, "nu");
  // For a metric the shared mass stays put, so only surpluses move.
  std::vector<Index> src, dst;
  std::vector<double> a, b;
  for (Index i = 0; i < mu.size(); ++i) {
    const double diff = mu(i) - nu(i);
    if (diff > kZero) {
      src.push_back(i);
      a.push_back(diff);
    } else if (-diff > kZero) {
      dst.push_back(i);
      b.push_back(-diff);
    }
  }
  if (src.empty() || dst.empty()) return 0.0;
  Matrix sub(static_cast<Index>(src.size()), static_cast<Index>(dst.size()));
  for (std::size_t r = 0; r < src.size(); ++r)
    for (std::size_t c = 0; c < dst.size(); ++c) sub(static_cast<Index>(r), static_cast<Index>(c)) = metric.d(src[r], dst[c]);
  const Matrix flow = solve_bipartite(a, b, sub);
  return flow.cwiseProduct(sub).sum();
}

}  // namespace mixdecomp
