#include "mixdecomp/well_covering.hpp"

#include "mixdecomp/decomposition.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

namespace mixdecomp {

const char* method_name(WcMethod method) {
  switch (method) {
    case WcMethod::oracle: return "oracle";
    case WcMethod::tree: return "tree";
    case WcMethod::propagation: return "propagation";
    case WcMethod::comparison: return "comparison";
  }
  return "unknown";
}

namespace {

// Dense Edmonds-Karp on a handful of nodes with real capacities.
class FlowNetwork {
 public:
  explicit FlowNetwork(int nodes) : n_(nodes), cap_(static_cast<std::size_t>(nodes * nodes), 0.0) {}
  void add(int u, int v, double c) { cap_[idx(u, v)] += c; }
  double max_flow(int s, int t) {
    double total = 0.0;
    std::vector<int> parent(static_cast<std::size_t>(n_));
    for (;;) {
      std::fill(parent.begin(), parent.end(), -1);
      parent[static_cast<std::size_t>(s)] = s;
      std::deque<int> queue{s};
      while (!queue.empty() && parent[static_cast<std::size_t>(t)] < 0) {
        const int u = queue.front();
        queue.pop_front();
        for (int v = 0; v < n_; ++v)
          if (parent[static_cast<std::size_t>(v)] < 0 && cap_[idx(u, v)] > kEps) {
            parent[static_cast<std::size_t>(v)] = u;
            queue.push_back(v);
          }
      }
      if (parent[static_cast<std::size_t>(t)] < 0) return total;
      double push = std::numeric_limits<double>::infinity();
      for (int v = t; v != s; v = parent[static_cast<std::size_t>(v)])
        push = std::min(push, cap_[idx(parent[static_cast<std::size_t>(v)], v)]);
      for (int v = t; v != s; v = parent[static_cast<std::size_t>(v)]) {
        cap_[idx(parent[static_cast<std::size_t>(v)], v)] -= push;
        cap_[idx(v, parent[static_cast<std::size_t>(v)])] += push;
      }
      total += push;
    }
  }

 private:
  static constexpr double kEps = 1e-15;
  std::size_t idx(int u, int v) const { return static_cast<std::size_t>(u * n_ + v); }
  int n_;
  std::vector<double> cap_;
};

constexpr double kFlowSlack = 1e-12;

// Bounded-flow feasibility of N given kappa; fills N on success.
bool n_feasible(const Matrix& Q, const std::vector<double>& kappa, double B, double T, Matrix* N_out) {
  const int n = static_cast<int>(kappa.size());
  std::vector<double> radius(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) radius[static_cast<std::size_t>(i)] = B * std::sqrt(kappa[static_cast<std::size_t>(i)] / T);
  Matrix lo(n, n), hi(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = radius[static_cast<std::size_t>(i)];
      const double a = kappa[static_cast<std::size_t>(i)] * Q(i, j);
      const double b = kappa[static_cast<std::size_t>(j)] * Q(j, i);
      lo(i, j) = std::max({0.0, a - r, b - r});
      hi(i, j) = std::min({1.0, a + r, b + r});
      if (lo(i, j) > hi(i, j) + kFlowSlack) return false;
      hi(i, j) = std::max(hi(i, j), lo(i, j));
    }
  // Nodes: source, rows, columns, sink, then the lower-bound super terminals.
  const int S = 0, R = 1, C = 1 + n, Tn = 1 + 2 * n, SS = 2 + 2 * n, TT = 3 + 2 * n;
  FlowNetwork net(4 + 2 * n);
  std::vector<double> excess(static_cast<std::size_t>(4 + 2 * n), 0.0);
  auto edge = [&](int u, int v, double l, double h) {
    net.add(u, v, h - l);
    excess[static_cast<std::size_t>(v)] += l;
    excess[static_cast<std::size_t>(u)] -= l;
  };
  const double slack = 1.0 / T;
  for (int i = 0; i < n; ++i) {
    const double k = kappa[static_cast<std::size_t>(i)];
    edge(S, R + i, std::max(0.0, k - slack), k + slack);
    edge(C + i, Tn, std::max(0.0, k - slack), k + slack);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) edge(R + i, C + j, lo(i, j), hi(i, j));
  edge(Tn, S, 1.0, 1.0);
  double demand = 0.0;
  for (int v = 0; v < 2 + 2 * n; ++v) {
    const double e = excess[static_cast<std::size_t>(v)];
    if (e > 0.0) {
      net.add(SS, v, e);
      demand += e;
    } else if (e < 0.0) {
      net.add(v, TT, -e);
    }
  }
  FlowNetwork probe = net;
  if (probe.max_flow(SS, TT) < demand - kFlowSlack) return false;
  if (N_out) {
    // Feasible; report the interval midpoints as a representative witness.
    *N_out = (lo + hi) / 2.0;
  }
  return true;
}

void validate_query(const WellCoveringQuery& q) {
  require(static_cast<Index>(q.thresholds.size()) == q.Q.size(), Errc::DimensionMismatch,
          "one threshold per block required");
  require(q.B > 0.0, Errc::InvalidParameter, "B must be positive");
  for (double t : q.thresholds) require(t >= 0.0, Errc::InvalidParameter, "thresholds must be nonnegative");
}

}  // namespace

OracleResult feasibility_oracle(const WellCoveringQuery& query, double T, int grid_resolution,
                                std::size_t max_witnesses) {
  validate_query(query);
  const Index n = query.Q.size();
  require(n <= kMaxOracleBlocks, Errc::TooManyBlocks, "feasibility oracle supports at most 3 blocks");
  require(grid_resolution >= 64, Errc::InvalidParameter, "grid resolution must be at least 64");
  require(T > 0.0, Errc::InvalidParameter, "horizon must be positive");
  OracleResult out;
  const double g = grid_resolution;
  out.grid_tolerance = 2.0 / g;
  const Matrix& Q = query.Q.matrix();

  auto check = [&](const std::vector<double>& kappa) {
    if (!out.covered && out.witnesses.size() >= max_witnesses) return;
    bool low = false;
    for (Index i = 0; i < n; ++i)
      if (kappa[static_cast<std::size_t>(i)] <= query.thresholds[static_cast<std::size_t>(i)] / T) low = true;
    if (!low) return;
    ++out.points_checked;
    Matrix N;
    if (n_feasible(Q, kappa, query.B, T, &N)) {
      out.covered = false;
      if (out.witnesses.size() < max_witnesses) out.witnesses.push_back({kappa, N});
    }
  };

  // Splits `rest` over the coordinates other than `fixed` along the grid.
  auto sweep = [&](Index fixed, double value) {
    const double rest = 1.0 - value;
    if (rest < -1e-15) return;
    if (n == 1) {
      check({1.0});
    } else if (n == 2) {
      std::vector<double> k(2);
      k[static_cast<std::size_t>(fixed)] = value;
      k[static_cast<std::size_t>(1 - fixed)] = std::max(0.0, rest);
      check(k);
    } else {
      for (int a = 0; a <= grid_resolution; ++a) {
        std::vector<double> k(3);
        Index p = 0;
        for (Index c = 0; c < 3; ++c) {
          if (c == fixed) {
            k[static_cast<std::size_t>(c)] = value;
          } else {
            k[static_cast<std::size_t>(c)] = std::max(0.0, p == 0 ? rest * a / g : rest * (1.0 - a / g));
            ++p;
          }
        }
        check(k);
      }
    }
  };

  if (n == 1) {
    check({1.0});
    return out;
  }
  // Barycentric grid: coordinate 0 on the grid, the rest swept.
  for (int a = 0; a <= grid_resolution; ++a) sweep(0, a / g);
  for (Index i = 0; i < n; ++i) {
    const double edge = query.thresholds[static_cast<std::size_t>(i)] / T;
    if (edge <= 1.0) sweep(i, edge);
  }
  return out;
}

std::optional<WellCoveringCertificate> oracle_wc_time(const WellCoveringQuery& query, int grid_resolution,
                                                      long T_max) {
  auto covered = [&](long T) { return feasibility_oracle(query, static_cast<double>(T), grid_resolution, 1).covered; };
  long hi = 1;
  while (!covered(hi)) {
    if (hi > T_max / 2) return std::nullopt;
    hi *= 2;
  }
  long lo = hi / 2;
  if (hi == 1) lo = 0;
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (covered(mid) ? hi : lo) = mid;
  }
  WellCoveringCertificate c;
  c.T = static_cast<double>(hi);
  c.method = WcMethod::oracle;
  c.grid_tolerance = 2.0 / grid_resolution;
  return c;
}

WellCoveringCertificate tree_bound(const StochasticKernel& Q, int Delta, double phi, double B) {
  const Index n = Q.size();
  require(Delta >= 1, Errc::NotTreeWalk, "Delta must be positive");
  require(phi >= 0.0 && B > 0.0, Errc::InvalidParameter, "need phi >= 0 and B > 0");
  const double w = 1.0 / (2.0 * Delta);
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  long edges = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double q = Q(i, j);
      if (q == 0.0) continue;
      require(std::abs(q - w) <= 1e-12, Errc::NotTreeWalk, "edge weight differs from 1/(2 Delta)");
      require(std::abs(Q(j, i) - w) <= 1e-12, Errc::NotTreeWalk, "tree walk must be symmetric");
      adj[static_cast<std::size_t>(i)].push_back(j);
      if (i < j) ++edges;
    }
  require(edges == n - 1, Errc::NotTreeWalk, "support graph is not a tree");
  for (const auto& a : adj) require(static_cast<int>(a.size()) <= Delta, Errc::NotTreeWalk, "degree exceeds Delta");
  long D = 0;
  for (Index s = 0; s < n; ++s) {
    std::vector<long> dist(static_cast<std::size_t>(n), -1);
    dist[static_cast<std::size_t>(s)] = 0;
    std::deque<Index> queue{s};
    while (!queue.empty()) {
      const Index u = queue.front();
      queue.pop_front();
      for (Index v : adj[static_cast<std::size_t>(u)])
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
    }
    for (long d : dist) {
      require(d >= 0, Errc::NotTreeWalk, "support graph is disconnected");
      D = std::max(D, d);
    }
  }
  const double dd = Delta;
  WellCoveringCertificate c;
  c.method = WcMethod::tree;
  c.T = static_cast<double>(n) * std::max(1e3 * dd * dd * B * B * static_cast<double>(D * D), 4.0 * phi);
  return c;
}

std::optional<WellCoveringCertificate> propagation_bound(const WellCoveringQuery& query, long T_max) {
  validate_query(query);
  const Index n = query.Q.size();
  const Matrix& Q = query.Q.matrix();
  const double B = query.B;

  auto certified = [&](long Tl) {
    const double T = static_cast<double>(Tl);
    for (Index root = 0; root < n; ++root) {
      std::vector<double> lb(static_cast<std::size_t>(n), 0.0);
      lb[static_cast<std::size_t>(root)] = 1.0 / static_cast<double>(n);
      for (Index round = 0; round < n; ++round) {
        bool changed = false;
        for (Index l = 0; l < n; ++l) {
          const double kl = lb[static_cast<std::size_t>(l)];
          if (kl <= 0.0) continue;
          for (Index j = 0; j < n; ++j) {
            if (j == l || Q(l, j) <= 0.0 || Q(j, l) <= 0.0) continue;
            // The map is increasing only once sqrt(kappa) >= B / (Q sqrt(T)).
            if (kl < B * B / (Q(l, j) * Q(l, j) * T)) continue;
            const double cand = std::min(1.0, (kl * Q(l, j) - 2.0 * B * std::sqrt(kl / T)) / Q(j, l));
            if (cand > lb[static_cast<std::size_t>(j)]) {
              lb[static_cast<std::size_t>(j)] = cand;
              changed = true;
            }
          }
        }
        if (!changed) break;
      }
      for (Index j = 0; j < n; ++j)
        if (!(lb[static_cast<std::size_t>(j)] > query.thresholds[static_cast<std::size_t>(j)] / T)) return false;
    }
    return true;
  };

  long hi = 1;
  while (!certified(hi)) {
    if (hi > T_max / 2) return std::nullopt;
    hi *= 2;
  }
  long lo = hi == 1 ? 0 : hi / 2;
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (certified(mid) ? hi : lo) = mid;
  }
  WellCoveringCertificate c;
  c.T = static_cast<double>(hi);
  c.method = WcMethod::propagation;
  c.extension = true;
  return c;
}

WellCoveringCertificate compare_wc(const WellCoveringCertificate& certificate, const WcTransform& transform) {
  WellCoveringCertificate out = certificate;
  out.method = WcMethod::comparison;
  ComparisonStep step;
  switch (transform.kind) {
    case WcTransform::Kind::monotone: {
      require(transform.target && transform.base, Errc::InvalidComparison, "monotone comparison needs both kernels");
      const auto& Qt = *transform.target;
      const auto& Qb = *transform.base;
      require(Qt.size() == Qb.size(), Errc::InvalidComparison, "kernels differ in size");
      const auto mu_t = stationary_distribution(Qt);
      const auto mu_b = stationary_distribution(Qb);
      require((mu_t.weights() - mu_b.weights()).cwiseAbs().maxCoeff() <= 1e-9, Errc::InvalidComparison,
              "stationary measures differ");
      require(check_reversible(Qt, mu_t).reversible && check_reversible(Qb, mu_b).reversible,
              Errc::InvalidComparison, "comparison kernels must be reversible");
      for (Index i = 0; i < Qt.size(); ++i)
        for (Index j = 0; j < Qt.size(); ++j)
          if (i != j)
            require(Qt(i, j) >= Qb(i, j) - 1e-15, Errc::InvalidComparison, "target kernel is not pointwise larger");
      step = {"monotone", 9.0};
      break;
    }
    case WcTransform::Kind::lazify: {
      require(transform.base.has_value(), Errc::InvalidComparison, "lazify comparison needs the base kernel");
      require(transform.alpha > 0.0 && transform.alpha < 1.0, Errc::InvalidComparison, "alpha must lie in (0, 1)");
      const auto& Qb = *transform.base;
      for (Index i = 0; i < Qb.size(); ++i)
        require(Qb(i, i) >= 0.5 - 1e-12, Errc::InvalidComparison, "base kernel is not 1/2-lazy");
      step = {"lazify(" + std::to_string(transform.alpha) + ")", 1.0 / (transform.alpha * transform.alpha)};
      break;
    }
    case WcTransform::Kind::scale_thresholds:
      require(transform.alpha > 1.0, Errc::InvalidComparison, "threshold scaling needs alpha > 1");
      step = {"scale_thresholds(" + std::to_string(transform.alpha) + ")", transform.alpha};
      break;
    case WcTransform::Kind::scale_B:
      require(transform.alpha > 1.0, Errc::InvalidComparison, "B scaling needs alpha > 1");
      step = {"scale_B(" + std::to_string(transform.alpha) + ")", transform.alpha * transform.alpha};
      break;
  }
  out.T *= step.factor;
  out.provenance.push_back(step);
  return out;
}

BoundResult bootstrap_mixing_bound(const std::vector<double>& phi, const std::vector<double>& masses,
                                   const std::vector<Index>& I, double alpha, double beta, const WcProvider& provider,
                                   const std::string& provider_name, const PeresSousiConstants& constants,
                                   long T_max) {
  require(phi.size() == masses.size() && !phi.empty(), Errc::DimensionMismatch, "phi and masses must cover all blocks");
  require(beta > 0.5 && beta < 1.0 && beta > 1.0 - alpha && alpha > 0.0 && alpha < 0.5, Errc::PreconditionViolated,
          "need 1/2 < 1 - alpha < beta < 1");
  double mass = 0.0;
  for (Index i : I) mass += masses.at(static_cast<std::size_t>(i));
  require(mass >= beta, Errc::PreconditionViolated, "block set mass must be at least beta");
  const auto n = static_cast<double>(phi.size());
  const double phi_max = *std::max_element(phi.begin(), phi.end());
  std::vector<double> thresholds(phi.size(), 0.0);
  for (Index i : I)
    thresholds[static_cast<std::size_t>(i)] = 8.0 * constants.c_alpha_prime * phi[static_cast<std::size_t>(i)];

  auto holds = [&](long T) {
    const double B = std::sqrt(8.0 * phi_max * std::log(64.0 * n * n * static_cast<double>(T)));
    const auto wc = provider(thresholds, B);
    return wc.has_value() && static_cast<double>(T) > *wc;
  };

  BoundResult out;
  out.name = "bootstrap";
  out.universal_constant_flag = !constants.calibrated;
  out.provenance = "formula(" + std::string(constants.calibrated ? "calibrated" : "uncalibrated") +
                   ")+wc(" + provider_name + ")";
  out.ingredients = {{"alpha", alpha}, {"beta", beta}, {"phi_max", phi_max}, {"n", n},
                     {"c_alpha", constants.c_alpha}, {"c_alpha_prime", constants.c_alpha_prime}};
  long hi = 1;
  while (!holds(hi)) {
    if (hi > T_max / 2) {
      out.status = BoundStatus::no_feasible_t;
      return out;
    }
    hi *= 2;
  }
  long lo = hi == 1 ? 0 : hi / 2;
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (holds(mid) ? hi : lo) = mid;
  }
  out.ingredients["T"] = static_cast<double>(hi);
  out.ingredients["B"] = std::sqrt(8.0 * phi_max * std::log(64.0 * n * n * static_cast<double>(hi)));
  out.value = 4.0 / 3.0 * constants.c_alpha * static_cast<double>(hi);
  return out;
}

std::vector<ConcentrationRow> concentration_audit(const StochasticKernel& kernel, const StationaryDistribution& pi,
                                                  const Partition& partition, Index i, Index j,
                                                  const std::vector<long>& t_grid, const std::vector<double>& c_grid,
                                                  long reps, std::uint64_t seed, double phi_max,
                                                  const StateSet& starts) {
  require(reps >= 1000, Errc::InvalidParameter, "concentration audit needs at least 1000 replicates");
  require(i >= 0 && j >= 0 && i < partition.n_blocks() && j < partition.n_blocks() && i != j,
          Errc::InvalidPartition, "need two distinct blocks");
  require(!t_grid.empty() && !c_grid.empty() && !starts.empty(), Errc::InvalidParameter, "empty audit grid");
  const StochasticKernel Kbar = projected_kernel(kernel, pi, partition);
  const double kij = Kbar(i, j), kji = Kbar(j, i);
  const long t_max = *std::max_element(t_grid.begin(), t_grid.end());
  const KernelSampler sampler(kernel);

  std::vector<ConcentrationRow> rows;
  for (std::size_t si = 0; si < starts.size(); ++si) {
    const State x0 = static_cast<State>(starts[si]);
    // dep[r][k]: departures i -> j among the first t_k + 1 visits to i;
    // arr[r][k]: arrivals j <- i among the first t_k + 1 visits to j at times >= 1.
    std::vector<long> dep(static_cast<std::size_t>(reps) * t_grid.size());
    std::vector<long> arr(dep.size());
    parallel_for(reps, [&](long r) {
      Rng rng(seed, static_cast<std::uint64_t>(si) * static_cast<std::uint64_t>(reps) + static_cast<std::uint64_t>(r));
      State x = x0;
      long visits_i = 0, visits_j = 0, count_dep = 0, count_arr = 0;
      bool done_i = false, done_j = false;
      std::size_t next_i = 0, next_j = 0;
      std::vector<std::pair<long, std::size_t>> order(t_grid.size());
      for (std::size_t k = 0; k < t_grid.size(); ++k) order[k] = {t_grid[k], k};
      std::sort(order.begin(), order.end());
      long* d = &dep[static_cast<std::size_t>(r) * t_grid.size()];
      long* a = &arr[static_cast<std::size_t>(r) * t_grid.size()];
      while (!done_i || !done_j) {
        const Index bx = partition.block_of(static_cast<Index>(x));
        const State y = sampler.step(x, rng);
        const Index by = partition.block_of(static_cast<Index>(y));
        if (!done_i && bx == i) {
          if (by == j) ++count_dep;
          ++visits_i;
          while (next_i < order.size() && visits_i == order[next_i].first + 1) d[order[next_i++].second] = count_dep;
          done_i = next_i == order.size();
        }
        if (!done_j && by == j) {
          if (bx == i) ++count_arr;
          ++visits_j;
          while (next_j < order.size() && visits_j == order[next_j].first + 1) a[order[next_j++].second] = count_arr;
          done_j = next_j == order.size();
        }
        x = y;
      }
      (void)t_max;
    });
    for (std::size_t k = 0; k < t_grid.size(); ++k)
      for (double c : c_grid)
        for (int orientation = 1; orientation <= 2; ++orientation) {
          const double target = orientation == 1 ? kij : kji;
          const auto& counts = orientation == 1 ? dep : arr;
          long exceed = 0;
          for (long r = 0; r < reps; ++r) {
            const double freq = static_cast<double>(counts[static_cast<std::size_t>(r) * t_grid.size() + k]) /
                                static_cast<double>(t_grid[k] + 1);
            if (std::abs(freq - target) > c) ++exceed;
          }
          const TailEstimate e = wilson(exceed, reps);
          ConcentrationRow row;
          row.c = c;
          row.t = t_grid[k];
          row.orientation = orientation;
          row.start = starts[si];
          row.empirical = e.point;
          row.wilson_hi = e.wilson_hi;
          row.bound = 4.0 * std::exp(-c * c * static_cast<double>(t_grid[k] + 1) / (8.0 * phi_max));
          row.reps = reps;
          rows.push_back(row);
        }
  }
  return rows;
}

void write_concentration_csv(std::ostream& out, const std::vector<ConcentrationRow>& rows) {
  out << "c,t,orientation,start,empirical,wilson_hi,bound\n";
  for (const auto& r : rows)
    out << r.c << ',' << r.t << ',' << r.orientation << ',' << r.start << ',' << r.empirical << ',' << r.wilson_hi
        << ',' << r.bound << '\n';
}

}  // namespace mixdecomp
