#include "mixdecomp/bounds.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/rng.hpp"

#include <algorithm>
#include <numeric>

namespace mixdecomp {

namespace {

constexpr double kMassSlack = 1e-15;

}  // namespace

HittingMixingAudit peres_sousi_audit(const StochasticKernel& kernel, const StationaryDistribution& pi, double alpha,
                                     SubsetMode mode, long horizon, long samples, std::uint64_t seed) {
  require(alpha > 0.0 && alpha <= 1.0, Errc::InvalidAlpha, "alpha must lie in (0, 1]");
  require(pi.size() == kernel.size(), Errc::DimensionMismatch, "pi length differs from kernel");
  const Index n = kernel.size();
  HittingMixingAudit out;
  const auto tau = mixing_time(kernel, pi, horizon);
  require(tau.has_value(), Errc::HorizonOverflow, "mixing time exceeds the audit horizon");
  out.tau_mix = *tau;

  bool found = false;
  auto consider = [&](StateSet set) {
    ++out.sets_evaluated;
    const Vector h = expected_hitting_times(kernel, set);
    Index arg = 0;
    const double v = h.maxCoeff(&arg);
    if (!found || v > out.max_hit) {
      found = true;
      out.max_hit = v;
      out.worst_set = std::move(set);
      out.worst_start = arg;
    }
  };

  if (mode == SubsetMode::exact) {
    require(n <= kMaxExactAuditStates, Errc::StateSpaceTooLarge, "exact audit supports at most 15 states");
    // Hitting times shrink as the target grows; minimal qualifying sets suffice.
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
      double mass = 0.0;
      for (Index x = 0; x < n; ++x)
        if ((mask >> x) & 1U) mass += pi(x);
      if (mass < alpha - kMassSlack) continue;
      bool minimal = true;
      StateSet set;
      for (Index x = 0; x < n; ++x)
        if ((mask >> x) & 1U) {
          set.push_back(x);
          if (mass - pi(x) >= alpha - kMassSlack) minimal = false;
        }
      if (minimal) consider(std::move(set));
    }
  } else {
    out.lower_bound_only = true;
    Rng rng(seed, 0xa0d1);
    auto prefix = [&](const std::vector<Index>& order) {
      StateSet set;
      double mass = 0.0;
      for (Index x : order) {
        set.push_back(x);
        mass += pi(x);
        if (mass >= alpha - kMassSlack) break;
      }
      std::sort(set.begin(), set.end());
      return set;
    };
    // Adversarial sets: states ordered by how long they take to reach a start.
    const Index starts = std::min<Index>(n, 32);
    for (Index k = 0; k < starts; ++k) {
      const Index z = n <= 32 ? k : static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      const Vector far = expected_hitting_times(kernel, {z});
      std::vector<Index> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), Index{0});
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return far(a) > far(b); });
      consider(prefix(order));
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    for (long s = 0; s < samples; ++s) {
      for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
      consider(prefix(order));
    }
  }
  require(found && out.max_hit > 0.0, Errc::AssertionFailed, "hitting/mixing ratio is not finite and positive");
  out.ratio = static_cast<double>(out.tau_mix) / out.max_hit;
  return out;
}

PeresSousiConstants calibrate_constants(const HittingMixingAudit& audit, const std::string& reference) {
  require(audit.ratio > 0.0, Errc::InvalidParameter, "calibration needs a positive ratio");
  return {audit.ratio, audit.ratio, true, reference};
}

}  // namespace mixdecomp
