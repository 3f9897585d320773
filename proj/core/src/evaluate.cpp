#include "mixdecomp/evaluate.hpp"

#include "mixdecomp/contraction.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/well_covering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mixdecomp {

ChainAnalysis analyze_chain(const StochasticKernel& kernel, const StationaryDistribution& pi,
                            const Partition& partition, long horizon) {
  ChainAnalysis a;
  const auto tau = mixing_time(kernel, pi, horizon);
  require(tau.has_value(), Errc::HorizonOverflow, "mixing time exceeds the analysis horizon");
  a.tau_mix = *tau;
  a.relaxation_time = relaxation_time(kernel, pi);
  const DecompositionReport dec = decompose(kernel, pi, partition, horizon);
  require(!dec.horizon_exceeded, Errc::HorizonOverflow, "a block mixing time exceeds the analysis horizon");
  a.phi.assign(dec.block_mixing_times.begin(), dec.block_mixing_times.end());
  a.phi_max = dec.phi_max;
  a.masses = dec.block_masses;
  a.projected = dec.projected.matrix();
  a.reversibility_residual = check_reversible(kernel, pi).max_residual;
  const Index n = partition.n_blocks();
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      a.projected_residual = std::max(a.projected_residual,
                                      std::abs(a.masses[static_cast<std::size_t>(i)] * a.projected(i, j) -
                                               a.masses[static_cast<std::size_t>(j)] * a.projected(j, i)));
  return a;
}

std::vector<Index> heavy_prefix(const std::vector<double>& masses, double beta) {
  std::vector<Index> order(masses.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    return masses[static_cast<std::size_t>(x)] > masses[static_cast<std::size_t>(y)];
  });
  std::vector<Index> I;
  double mass = 0.0;
  for (Index b : order) {
    I.push_back(b);
    mass += masses[static_cast<std::size_t>(b)];
    if (mass > beta) break;
  }
  require(mass > beta, Errc::PreconditionViolated, "total block mass does not exceed beta");
  std::sort(I.begin(), I.end());
  return I;
}

namespace {

double set_mass(const std::vector<double>& masses, const std::vector<Index>& I) {
  double m = 0.0;
  for (Index i : I) m += masses[static_cast<std::size_t>(i)];
  return m;
}

// beta halfway between 1 - alpha and the mass of I (capped below 1).
double midpoint_beta(double alpha, double mass) { return std::min(0.5 * (1.0 - alpha + std::min(mass, 1.0)), 0.999); }

BoundResult not_applicable(const std::string& name, const std::string& reason) {
  BoundResult b;
  b.name = name;
  b.status = BoundStatus::hypothesis_unverified;
  b.notes["applicable"] = reason;
  b.notes["target"] = "tau_mix";
  return b;
}

}  // namespace

BoundResult bound_basic_exact(const StochasticKernel& kernel, const Partition& partition, const ChainAnalysis& a,
                              double alpha, double beta, const std::vector<Index>& I,
                              const PeresSousiConstants& constants, long cap_start, long cap_max) {
  require(cap_start >= 1 && cap_max >= cap_start, Errc::InvalidParameter, "bad tabulation horizons");
  BoundResult out;
  for (long cap = cap_start; cap <= cap_max; cap *= 2) {
    ExactOccupationTails tails(kernel, partition, I, cap);
    SearchOptions options;
    options.T_max = cap;
    out = bound_basic(a.phi, tails, a.masses, alpha, beta, I, constants, options);
    out.ingredients["T_cap"] = static_cast<double>(cap);
    if (out.status == BoundStatus::ok) break;
  }
  return out;
}

std::optional<DriftInput> default_drift(const ChainInstance& chain) {
  if (chain.family != "toy_kcip" || !chain.kernel) return std::nullopt;
  const int m = static_cast<int>(chain.params.at("m"));
  const int d = static_cast<int>(chain.params.at("d"));
  DriftInput in;
  in.V.resize(3 * m);
  for (Index x = 0; x < 3 * m; ++x) in.V(x) = std::exp(0.5 * static_cast<double>(x / 3 + 1));
  in.a = 0.5;
  in.k = static_cast<int>(std::lround(std::pow(static_cast<double>(m), d + 1)));
  return in;
}

BoundResult regular_bound(const StochasticKernel& kernel, const StationaryDistribution& pi,
                          const Partition& partition, const ChainAnalysis& a, double hit_alpha, double envelope) {
  const AvgHitResult hit = avg_hit_time(kernel, pi, partition, hit_alpha,
                                        partition.n_blocks() <= kMaxExactSubsetBlocks ? SubsetMode::exact
                                                                                       : SubsetMode::sampled);
  if (!hit.value) return not_applicable("regular", "no block set reaches the hitting mass level");
  const Index n = partition.n_blocks();
  const double logn = std::log(static_cast<double>(std::max<Index>(n, 2)));
  double best_raw = std::numeric_limits<double>::infinity();
  EscapeRegularity best;
  for (int k = 1; k <= 8; ++k) {
    const EscapeRegularity r = escape_regularity(kernel, partition, std::ldexp(1.0, -k), a.phi_max);
    if (r.delta <= 0.0) continue;
    const double raw = *hit.value * static_cast<double>(n) * logn / (r.epsilon * r.delta);
    if (raw < best_raw) {
      best_raw = raw;
      best = r;
    }
  }
  if (!std::isfinite(best_raw)) return not_applicable("regular", "escape tails give delta = 0 on the epsilon grid");
  BoundResult out = bound_regular(best.epsilon, best.delta, *hit.value, n, envelope, !hit.lower_bound_only);
  out.ingredients["escape_threshold"] = static_cast<double>(best.threshold);
  out.notes["applicable"] = hit.lower_bound_only ? "phi_bar_hit sampled (lower bound only)" : "yes";
  out.notes["target"] = "tau_mix";
  return out;
}

bool applicable_mixing_bound(const BoundResult& bound) {
  const auto a = bound.notes.find("applicable");
  const auto t = bound.notes.find("target");
  return bound.status == BoundStatus::ok && a != bound.notes.end() && a->second == "yes" && t != bound.notes.end() &&
         t->second == "tau_mix";
}

std::vector<BoundResult> evaluate_bounds(const StochasticKernel& kernel, const StationaryDistribution& pi,
                                         const Partition& partition, const ChainAnalysis& a,
                                         const EvaluationOptions& options) {
  std::vector<BoundResult> out;
  const double alpha = options.alpha;
  const Index n = partition.n_blocks();
  const PeresSousiConstants& C = options.constants;

  std::vector<Index> I;
  double beta = 0.0;
  try {
    I = heavy_prefix(a.masses, 1.0 - alpha);
    beta = midpoint_beta(alpha, set_mass(a.masses, I));
  } catch (const Error&) {
    // Only reachable through rounding; every later evaluator reports it.
  }

  // basic and basic2 share exact tails over I, tabulated to a doubling horizon.
  // basic2 runs over the qualifying sets inside I.
  if (I.empty()) {
    out.push_back(not_applicable("basic", "no block set heavier than 1 - alpha"));
    out.push_back(not_applicable("basic2", "no block set heavier than 1 - alpha"));
  } else {
    const auto all = qualifying_sets(a.masses, alpha);
    std::vector<std::vector<Index>> candidates;
    for (const auto& set : all)
      if (std::all_of(set.begin(), set.end(), [&](Index b) { return std::binary_search(I.begin(), I.end(), b); }))
        candidates.push_back(set);
    const bool complete = !all.empty() && candidates.size() == all.size();
    BoundResult basic, basic2;
    bool done1 = false, done2 = candidates.empty();
    for (long cap = options.cap_start; cap <= options.cap_max && !(done1 && done2); cap *= 2) {
      ExactOccupationTails tails(kernel, partition, I, cap);
      SearchOptions so;
      so.T_max = cap;
      if (!done1) {
        basic = bound_basic(a.phi, tails, a.masses, alpha, beta, I, C, so);
        basic.ingredients["T_cap"] = static_cast<double>(cap);
        done1 = basic.status == BoundStatus::ok;
      }
      if (!done2) {
        basic2 = bound_basic2(a.phi, tails, a.masses, alpha, candidates, complete, C, so);
        basic2.ingredients["T_cap"] = static_cast<double>(cap);
        done2 = basic2.status == BoundStatus::ok;
      }
    }
    basic.notes["applicable"] = "yes";
    basic.notes["target"] = "tau_mix";
    out.push_back(std::move(basic));
    if (candidates.empty()) {
      out.push_back(not_applicable("basic2", "no qualifying set inside the tabulated blocks"));
    } else {
      basic2.notes["applicable"] = "yes";
      basic2.notes["target"] = "tau_mix";
      out.push_back(std::move(basic2));
    }
  }

  out.push_back(regular_bound(kernel, pi, partition, a, options.hit_alpha, options.regular_envelope));

  // graph-hit: an upper bound on phi_bar_hit, not on tau_mix.
  {
    const EscapeRegularity r = escape_regularity(kernel, partition, 0.5, a.phi_max);
    if (r.delta > 0.0) {
      BoundResult g = bound_graph_hit(kernel, partition, options.graph_c, r.epsilon, r.delta,
                                      static_cast<double>(a.phi_max)).bound;
      g.notes["applicable"] = "yes";
      g.notes["target"] = "phi_bar_hit";
      out.push_back(std::move(g));
    } else {
      BoundResult g = not_applicable("graph_hit", "escape tails give delta = 0 at epsilon = 1/2");
      g.notes["target"] = "phi_bar_hit";
      out.push_back(std::move(g));
    }
  }

  // bootstrap through a certified well-covering time of Kbar.
  if (!I.empty()) {
    const StochasticKernel Kbar(a.projected);
    WcProvider provider;
    std::string provider_name;
    if (n <= kMaxOracleBlocks) {
      provider_name = "oracle";
      provider = [Kbar](const std::vector<double>& th, double B) -> std::optional<double> {
        const auto cert = oracle_wc_time({Kbar, th, B});
        return cert ? std::optional<double>(cert->T) : std::nullopt;
      };
    } else {
      provider_name = "propagation";
      provider = [Kbar](const std::vector<double>& th, double B) -> std::optional<double> {
        const auto cert = propagation_bound({Kbar, th, B});
        return cert ? std::optional<double>(cert->T) : std::nullopt;
      };
    }
    BoundResult b = bootstrap_mixing_bound(a.phi, a.masses, I, alpha, beta, provider, provider_name, C);
    b.notes["applicable"] = "yes";
    b.notes["target"] = "tau_mix";
    out.push_back(std::move(b));
  } else {
    out.push_back(not_applicable("bootstrap", "no block set heavier than 1 - alpha"));
  }

  // drift, when the family supplies a Lyapunov function.
  if (options.drift) {
    const DriftCertificate cert = fit_drift(kernel, options.drift->V, options.drift->a, options.drift->k);
    const double M = 4.0 * cert.b / cert.a;
    const StateSet level = sublevel_set(cert, M);
    const StochasticKernel trace = trace_kernel(kernel, level);
    const auto tau_trace = mixing_time(trace, stationary_distribution(trace), kAnalysisHorizon);
    if (!tau_trace) {
      out.push_back(not_applicable("drift", "trace on the sublevel set did not mix within the horizon"));
    } else {
      BoundResult b = bound_drift(cert, M, static_cast<double>(*tau_trace), C);
      b.ingredients["level_size"] = static_cast<double>(level.size());
      b.notes["applicable"] = "yes";
      b.notes["target"] = "tau_mix";
      out.push_back(std::move(b));
    }
  } else {
    out.push_back(not_applicable("drift", "no Lyapunov function supplied"));
  }

  // contraction under the discrete block metric.
  if (kernel.size() * kernel.size() > static_cast<Index>(kMaxExactPairs)) {
    out.push_back(not_applicable("contraction", "too many states for exact pair coverage"));
  } else {
    const ContractionEstimate est = estimate_contraction(kernel, partition, BlockMetric::discrete(n), n, 1);
    if (!est.certified) {
      BoundResult b = not_applicable("contraction", "no certified (alpha, beta) with beta < alpha / 2");
      b.ingredients = {{"alpha", est.alpha}, {"beta", est.beta}};
      out.push_back(std::move(b));
    } else {
      const auto hit = avg_hit_time(kernel, pi, partition, options.hit_alpha,
                                    n <= kMaxExactSubsetBlocks ? SubsetMode::exact : SubsetMode::sampled);
      BoundResult best = not_applicable("contraction", "occupation regularity not verified on the a-grid");
      for (int p2 = 1; p2 <= 8; ++p2)
        for (int p1 = 0; p1 <= 8; ++p1) {
          const double a2 = std::ldexp(1.0, -p2);
          const double a1 = std::ldexp(1.0, -p1);
          const OccupationRegularity reg =
              occupation_regularity(kernel, partition, a1, a2, static_cast<double>(a.phi_max), n);
          if (!reg.verified1 || !reg.verified2 || reg.delta1 >= 1.0) continue;
          ContractionBoundInput in{est.alpha, est.beta, a1, a2, reg.delta1, reg.delta2,
                                   static_cast<double>(a.phi_max), hit.value.value_or(0.0), est.D_max, n};
          BoundResult b = bound_contraction(in, C);
          if (best.status != BoundStatus::ok || b.value < best.value) best = std::move(b);
        }
      if (best.status == BoundStatus::ok) {
        best.notes["applicable"] = "yes";
        best.notes["target"] = "tau_mix";
      }
      out.push_back(std::move(best));
    }
  }

  // coupling to one heavy point.
  {
    Index z = 0;
    const double top = pi.weights().maxCoeff(&z);
    const double eps = 1.0 - top;
    if (eps >= 0.25) {
      BoundResult b = not_applicable("coupling_point", "no state carries stationary mass above 3/4");
      b.ingredients["max_pi"] = top;
      out.push_back(std::move(b));
    } else {
      const double T = std::max(1.0, expected_hitting_times(kernel, {z}).maxCoeff());
      BoundResult b = bound_coupling_point(T, eps);
      b.notes["applicable"] = "yes";
      b.notes["target"] = "tau_mix";
      out.push_back(std::move(b));
    }
  }
  return out;
}

Calibration calibrate_on(const ChainInstance& reference, const std::string& name, std::uint64_t seed) {
  require(reference.kernel.has_value(), Errc::InvalidParameter, "calibration needs an explicit kernel");
  const StochasticKernel& K = *reference.kernel;
  const StationaryDistribution pi = reference.pi ? *reference.pi : stationary_distribution(K);
  const HittingMixingAudit audit = peres_sousi_audit(
      K, pi, 0.25, K.size() <= kMaxExactAuditStates ? SubsetMode::exact : SubsetMode::sampled, kAnalysisHorizon, 256,
      seed);
  Calibration c;
  c.constants = calibrate_constants(audit, name);
  c.reference_tau = audit.tau_mix;
  c.reference_max_hit = audit.max_hit;
  const ChainAnalysis a = analyze_chain(K, pi, reference.partition);
  const BoundResult raw = regular_bound(K, pi, reference.partition, a, 0.25, 1.0);
  require(raw.status == BoundStatus::ok, Errc::PreconditionViolated, "regular bound not available on the reference");
  c.regular_envelope = static_cast<double>(audit.tau_mix) / raw.value;
  return c;
}

}  // namespace mixdecomp
