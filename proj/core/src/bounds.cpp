#include "mixdecomp/bounds.hpp"

#include "mixdecomp/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace mixdecomp {

const char* status_name(BoundStatus status) {
  switch (status) {
    case BoundStatus::ok: return "ok";
    case BoundStatus::no_feasible_t: return "NoFeasibleT";
    case BoundStatus::hypothesis_unverified: return "HypothesisUnverified";
    case BoundStatus::disconnected_gc: return "DisconnectedGc";
  }
  return "unknown";
}

namespace {

std::string formula_provenance(const PeresSousiConstants& c) {
  return c.calibrated ? "formula(calibrated:" + c.calibration + ")" : "formula(uncalibrated)";
}

// Integers in [1, T-1], log spaced.
std::vector<long> log_grid(long T, int points) {
  std::vector<long> out;
  if (T < 2) return out;
  const double top = static_cast<double>(T - 1);
  for (int k = 0; k < points; ++k) {
    const double v = std::exp(std::log(top) * k / std::max(1, points - 1));
    out.push_back(std::clamp(static_cast<long>(std::llround(v)), 1L, T - 1));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct Witness {
  double objective = std::numeric_limits<double>::infinity();
  long t = 0;
};

// min over 0 < t < T of objective(t): log grid first, then a linear pass
// between the neighbours of the best grid point.
Witness minimize_t(long T, int points, const std::function<double(long)>& objective) {
  Witness best;
  const auto grid = log_grid(T, points);
  std::size_t arg = 0;
  // Ties go to the larger t: on a plateau the next drop lies to the right.
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = objective(grid[k]);
    if (v <= best.objective) {
      best = {v, grid[k]};
      arg = k;
    }
  }
  if (grid.empty() || best.objective < 0.25) return best;
  const long lo = grid[arg > 0 ? arg - 1 : 0];
  const long hi = grid[std::min(arg + 1, grid.size() - 1)];
  const long step = std::max(1L, (hi - lo) / points);
  for (long t = lo; t <= hi; t += step) {
    const double v = objective(t);
    if (v < best.objective) best = {v, t};
    if (best.objective < 0.25) break;
  }
  return best;
}

// Least T in [2, T_max] with objective < 1/4, assuming feasibility is monotone in T.
std::optional<std::pair<long, Witness>> search_T(const SearchOptions& options,
                                                 const std::function<Witness(long)>& at) {
  long hi = 2;
  Witness w;
  for (;; hi *= 2) {
    if (hi > options.T_max) return std::nullopt;
    w = at(hi);
    if (w.objective < 0.25) break;
  }
  long lo = hi / 2;   // infeasible, or 1
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    const Witness m = at(mid);
    if (m.objective < 0.25) {
      hi = mid;
      w = m;
    } else {
      lo = mid;
    }
  }
  return std::make_pair(hi, w);
}

}  // namespace

BoundResult bound_basic(const std::vector<double>& phi, OccupationTails& tails, const std::vector<double>& masses,
                        double alpha, double beta, const std::vector<Index>& I, const PeresSousiConstants& constants,
                        const SearchOptions& options) {
  require(alpha > 0.0 && alpha < 0.5, Errc::InvalidAlpha, "alpha must lie in (0, 1/2)");
  require(beta > 1.0 - alpha && beta < 1.0, Errc::PreconditionViolated, "beta must lie in (1 - alpha, 1)");
  require(!I.empty() && phi.size() == masses.size(), Errc::DimensionMismatch, "phi and masses must cover all blocks");
  double mass = 0.0;
  double phi_I = 0.0;
  for (Index i : I) {
    require(i >= 0 && static_cast<std::size_t>(i) < masses.size(), Errc::InvalidPartition, "block out of range");
    mass += masses[static_cast<std::size_t>(i)];
    phi_I = std::max(phi_I, phi[static_cast<std::size_t>(i)]);
  }
  require(mass > beta, Errc::PreconditionViolated, "block set mass must exceed beta");
  const double gamma = std::min(0.5, (alpha + beta - 1.0) / beta);
  const double cp = constants.c_alpha_prime;

  auto at = [&](long T) {
    return minimize_t(T, options.t_grid, [&](long t) {
      double worst = 0.0;
      for (Index i : I) {
        worst = std::max(worst, phi[static_cast<std::size_t>(i)] / (cp * static_cast<double>(t)) + tails.tail(i, T, t));
        if (worst >= 0.25) break;
      }
      return worst;
    });
  };

  BoundResult out;
  out.name = "basic";
  out.universal_constant_flag = !constants.calibrated;
  out.provenance = formula_provenance(constants) + "+" + tails.provenance();
  out.ingredients = {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"I_mass", mass},
                     {"I_size", static_cast<double>(I.size())}, {"phi_max_I", phi_I},
                     {"c_alpha", constants.c_alpha}, {"c_alpha_prime", cp}};
  const auto found = search_T(options, at);
  if (!found) {
    out.status = BoundStatus::no_feasible_t;
    out.ingredients["T_max"] = static_cast<double>(options.T_max);
    return out;
  }
  out.ingredients["T"] = static_cast<double>(found->first);
  out.ingredients["t"] = static_cast<double>(found->second.t);
  out.ingredients["objective"] = found->second.objective;
  out.value = 4.0 / 3.0 * constants.c_alpha * static_cast<double>(found->first);
  return out;
}

std::vector<std::vector<Index>> qualifying_sets(const std::vector<double>& masses, double alpha, Index max_blocks) {
  const auto n = static_cast<Index>(masses.size());
  std::vector<std::vector<Index>> out;
  if (n > max_blocks) return out;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    double mass = 0.0;
    std::vector<Index> set;
    for (Index i = 0; i < n; ++i)
      if ((mask >> i) & 1U) {
        mass += masses[static_cast<std::size_t>(i)];
        set.push_back(i);
      }
    if (mass >= alpha / 2.0 - 1e-15) out.push_back(std::move(set));
  }
  return out;
}

BoundResult bound_basic2(const std::vector<double>& phi, OccupationTails& tails, const std::vector<double>& masses,
                         double alpha, const std::vector<std::vector<Index>>& candidates, bool complete,
                         const PeresSousiConstants& constants, const SearchOptions& options) {
  require(alpha > 0.0 && alpha < 0.5, Errc::InvalidAlpha, "alpha must lie in (0, 1/2)");
  require(phi.size() == masses.size(), Errc::DimensionMismatch, "phi and masses must cover all blocks");
  require(!candidates.empty(), Errc::PreconditionViolated, "no qualifying block set");
  for (const auto& set : candidates) {
    double mass = 0.0;
    for (Index i : set) mass += masses.at(static_cast<std::size_t>(i));
    require(mass >= alpha / 2.0 - 1e-12, Errc::PreconditionViolated, "candidate set below alpha/2 mass");
  }
  const double cp = constants.c_alpha_prime;

  auto exp_sum = [&](const std::vector<Index>& set, long t) {
    double s = 0.0;
    for (Index i : set) {
      const double p = phi[static_cast<std::size_t>(i)];
      if (p > 0.0) s += std::exp(-std::floor(cp * static_cast<double>(t) / (std::numbers::e * p)));
    }
    return s;
  };
  auto at = [&](long T) {
    return minimize_t(T, options.t_grid, [&](long t) {
      double worst = 0.0;
      for (const auto& set : candidates) {
        const double e = exp_sum(set, t);
        if (e >= 0.25) return e;
        worst = std::max(worst, e + tails.joint_tail(set, T, t));
        if (worst >= 0.25) break;
      }
      return worst;
    });
  };

  BoundResult out;
  out.name = "basic2";
  out.universal_constant_flag = !constants.calibrated;
  out.provenance = formula_provenance(constants) + "+" + tails.provenance();
  out.ingredients = {{"alpha", alpha}, {"candidate_sets", static_cast<double>(candidates.size())},
                     {"c_alpha", constants.c_alpha}, {"c_alpha_prime", cp}};
  out.notes["set_coverage"] = complete ? "all qualifying sets" : "sampled candidate sets";
  const auto found = search_T(options, at);
  if (!found) {
    out.status = BoundStatus::no_feasible_t;
    out.ingredients["T_max"] = static_cast<double>(options.T_max);
    return out;
  }
  out.ingredients["T"] = static_cast<double>(found->first);
  out.ingredients["t"] = static_cast<double>(found->second.t);
  out.ingredients["objective"] = found->second.objective;
  out.value = 4.0 / 3.0 * constants.c_alpha * static_cast<double>(found->first);
  return out;
}

BoundResult bound_regular(double epsilon, double delta, double phi_bar_hit, Index n, double envelope,
                          bool hypothesis_verified) {
  require(epsilon > 0.0 && delta > 0.0 && phi_bar_hit >= 0.0 && n >= 1 && envelope > 0.0, Errc::InvalidParameter,
          "regular bound needs positive inputs");
  BoundResult out;
  out.name = "regular";
  out.universal_constant_flag = envelope == 1.0;
  out.provenance = "formula(envelope=" + std::to_string(envelope) + ")";
  const double nd = static_cast<double>(n);
  out.value = envelope * phi_bar_hit * nd * std::log(std::max(nd, 2.0)) / (epsilon * delta);
  out.ingredients = {{"epsilon", epsilon}, {"delta", delta}, {"phi_bar_hit", phi_bar_hit}, {"n", nd},
                     {"envelope", envelope}};
  if (!hypothesis_verified) {
    out.status = BoundStatus::hypothesis_unverified;
    out.notes["warning"] = "escape-time hypothesis not verified";
  }
  return out;
}

EscapeRegularity escape_regularity(const StochasticKernel& kernel, const Partition& partition, double epsilon,
                                   long phi_max) {
  require(epsilon > 0.0, Errc::InvalidParameter, "epsilon must be positive");
  EscapeRegularity out;
  out.epsilon = epsilon;
  out.threshold = static_cast<long>(std::floor(epsilon * static_cast<double>(phi_max)));
  out.delta = 1.0;
  if (partition.n_blocks() == 1) return out;
  for (Index i = 0; i < partition.n_blocks(); ++i)
    out.delta = std::min(out.delta, escape_survival(kernel, partition, i, out.threshold).minCoeff());
  return out;
}

ExitGraph exit_graph(const StochasticKernel& kernel, const Partition& partition, double c) {
  require(c > 0.0 && c <= 1.0, Errc::InvalidParameter, "c must lie in (0, 1]");
  const Index n = partition.n_blocks();
  ExitGraph g;
  g.edges.resize(static_cast<std::size_t>(n));
  if (n > 1)
    for (Index i = 0; i < n; ++i) {
      const Matrix dist = exit_block_distribution(kernel, partition, i);
      for (Index j = 0; j < n; ++j)
        if (j != i && dist.col(j).minCoeff() >= c) g.edges[static_cast<std::size_t>(i)].push_back(j);
    }
  long diameter = 0;
  for (Index s = 0; s < n; ++s) {
    std::vector<long> dist(static_cast<std::size_t>(n), -1);
    std::deque<Index> queue{s};
    dist[static_cast<std::size_t>(s)] = 0;
    while (!queue.empty()) {
      const Index u = queue.front();
      queue.pop_front();
      for (Index v : g.edges[static_cast<std::size_t>(u)])
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
    }
    for (long d : dist) {
      if (d < 0) return g;
      diameter = std::max(diameter, d);
    }
  }
  g.diameter = diameter;
  return g;
}

double graph_hit_formula(double c, double epsilon, double delta, double phi_max, long D) {
  return epsilon * phi_max * static_cast<double>(D) * std::pow(c * delta, -static_cast<double>(D));
}

GraphHitResult bound_graph_hit(const StochasticKernel& kernel, const Partition& partition, double c, double epsilon,
                               double delta, double phi_max) {
  require(epsilon > 0.0 && delta > 0.0 && delta <= 1.0 && phi_max >= 0.0, Errc::InvalidParameter,
          "graph-hit bound needs epsilon > 0, delta in (0, 1]");
  GraphHitResult out{exit_graph(kernel, partition, c), {}};
  auto& b = out.bound;
  b.name = "graph_hit";
  b.universal_constant_flag = false;
  b.provenance = "formula";
  b.ingredients = {{"c", c}, {"epsilon", epsilon}, {"delta", delta}, {"phi_max", phi_max}};
  if (!out.graph.diameter) {
    b.status = BoundStatus::disconnected_gc;
    return out;
  }
  b.ingredients["D"] = static_cast<double>(*out.graph.diameter);
  b.value = graph_hit_formula(c, epsilon, delta, phi_max, *out.graph.diameter);
  return out;
}

BoundResult bound_drift(const DriftCertificate& drift, double M, double tau_mix_trace,
                        const PeresSousiConstants& constants, double gamma) {
  require(drift.verified, Errc::DriftViolated, "drift certificate does not hold");
  require(drift.a > 0.0, Errc::DriftViolated, "drift rate must be positive");
  require(M >= 4.0 * drift.b / drift.a, Errc::MTooSmall, "level M must be at least 4b/a");
  require(tau_mix_trace >= 0.0, Errc::InvalidParameter, "negative trace mixing time");
  BoundResult out;
  out.name = "drift";
  out.universal_constant_flag = !constants.calibrated;
  out.provenance = formula_provenance(constants);
  const double inner = std::max({16.0 * tau_mix_trace / constants.c_alpha_prime,
                                 drift.k * std::log(16.0 * drift.V_max), 8.0 * std::log(16.0)});
  out.value = 16.0 * constants.c_alpha / (3.0 * drift.a) * inner;
  out.ingredients = {{"a", drift.a}, {"b", drift.b}, {"k", static_cast<double>(drift.k)}, {"V_max", drift.V_max},
                     {"M", M}, {"tau_mix_trace", tau_mix_trace}, {"gamma", gamma},
                     {"c_alpha", constants.c_alpha}, {"c_alpha_prime", constants.c_alpha_prime}};
  return out;
}

BoundResult bound_contraction(const ContractionBoundInput& in, const PeresSousiConstants& constants) {
  require(in.alpha > 0.0 && in.alpha <= 1.0 && in.beta >= 0.0, Errc::InvalidParameter,
          "need 0 < alpha <= 1 and beta >= 0");
  require(in.beta < in.alpha / 2.0, Errc::ContractionTooWeak, "contraction requires beta < alpha/2");
  require(in.a1 > 0.0 && in.a2 > 0.0, Errc::InvalidParameter, "a1, a2 must be positive");
  require(in.delta1 > 0.0 && in.delta1 < 1.0 && in.delta2 > 0.0 && in.delta2 <= 1.0, Errc::InvalidParameter,
          "need delta1 in (0, 1) and delta2 in (0, 1]");
  require(in.D_max >= 1.0 && in.n >= 1, Errc::InvalidParameter, "need D_max >= 1 and n >= 1");
  const double gamma = 0.5 - in.beta / in.alpha;
  const double eps = 0.25 - gamma / 16.0;
  const double power = std::ceil(8.0 * std::numbers::e / (in.a1 * constants.c_alpha_prime));
  const double log_term = std::abs(std::log1p(-std::pow(in.delta1, power)));
  const double c1 = 1024.0 / gamma * constants.c_alpha * (in.a2 / in.delta2) * std::log(16.0) / log_term;
  const double c2 = std::log2(8.0 / gamma);
  const double c3 = std::log(8.0 / gamma) + std::log(in.D_max);
  const double log_alpha = std::abs(std::log1p(-in.alpha));   // infinite at alpha = 1
  const double second = std::isinf(log_alpha) ? 0.0 : c3 / log_alpha;
  BoundResult out;
  out.name = "contraction";
  out.universal_constant_flag = !constants.calibrated;
  out.provenance = formula_provenance(constants);
  out.value = c1 * in.phi_max * std::log(static_cast<double>(in.n)) * std::max(c2 * in.phi_bar + 1.0, second);
  out.ingredients = {{"alpha", in.alpha}, {"beta", in.beta}, {"gamma", gamma}, {"epsilon", eps},
                     {"a1", in.a1}, {"a2", in.a2}, {"delta1", in.delta1}, {"delta2", in.delta2},
                     {"phi_max", in.phi_max}, {"phi_bar", in.phi_bar}, {"D_max", in.D_max},
                     {"n", static_cast<double>(in.n)}, {"C1", c1}, {"C2", c2}, {"C3", c3}};
  return out;
}

BoundResult bound_coupling_point(double T, double epsilon) {
  require(T >= 1.0, Errc::InvalidParameter, "hitting bound T must be at least 1");
  require(epsilon >= 0.0, Errc::InvalidParameter, "negative stationary deficit");
  require(epsilon < 0.25, Errc::EpsilonTooLarge, "stationary deficit must be below 1/4");
  BoundResult out;
  out.name = "coupling_point";
  out.universal_constant_flag = false;
  out.provenance = "formula";
  out.value = std::ceil(std::numbers::e * T) * std::ceil(std::log(4.0 * (1.0 - epsilon) / (1.0 - 4.0 * epsilon)));
  out.ingredients = {{"T", T}, {"epsilon", epsilon}};
  return out;
}

}  // namespace mixdecomp
