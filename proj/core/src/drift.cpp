#include "mixdecomp/bounds.hpp"
#include "mixdecomp/error.hpp"

#include <algorithm>
#include <cmath>

namespace mixdecomp {

namespace {

Vector apply_power(const StochasticKernel& kernel, const Vector& v, int k) {
  const auto& s = kernel.sparse();
  Vector cur = v;
  for (int step = 0; step < k; ++step) {
    Vector next = Vector::Zero(v.size());
    for (Index x = 0; x < kernel.size(); ++x)
      for (Index q = s.row_begin(x); q < s.row_end(x); ++q)
        next(x) += s.vals[static_cast<std::size_t>(q)] * cur(s.cols[static_cast<std::size_t>(q)]);
    cur = std::move(next);
  }
  return cur;
}

void check_inputs(const StochasticKernel& kernel, const Vector& V, double a, int k) {
  require(V.size() == kernel.size(), Errc::DimensionMismatch, "Lyapunov function length differs from kernel");
  require(V.minCoeff() >= 0.0, Errc::InvalidParameter, "Lyapunov function must be nonnegative");
  require(a > 0.0 && a <= 1.0, Errc::InvalidParameter, "drift rate a must lie in (0, 1]");
  require(k >= 1, Errc::InvalidParameter, "drift step count k must be positive");
}

}  // namespace

DriftCertificate verify_drift(const StochasticKernel& kernel, Vector V, double a, double b, int k) {
  check_inputs(kernel, V, a, k);
  require(b >= 0.0, Errc::InvalidParameter, "drift offset b must be nonnegative");
  const Vector KV = apply_power(kernel, V, k);
  DriftCertificate c;
  c.a = a;
  c.b = b;
  c.k = k;
  c.V_max = V.maxCoeff();
  c.max_violation = (KV - (1.0 - a) * V).maxCoeff() - b;
  c.verified = c.max_violation <= 1e-9 * std::max(1.0, c.V_max);
  c.V = std::move(V);
  return c;
}

DriftCertificate fit_drift(const StochasticKernel& kernel, Vector V, double a, int k) {
  check_inputs(kernel, V, a, k);
  const Vector KV = apply_power(kernel, V, k);
  const double b = std::max(0.0, (KV - (1.0 - a) * V).maxCoeff());
  return verify_drift(kernel, std::move(V), a, b, k);
}

StateSet sublevel_set(const DriftCertificate& drift, double M) {
  StateSet out;
  for (Index x = 0; x < drift.V.size(); ++x)
    if (drift.V(x) <= M) out.push_back(x);
  return out;
}

}  // namespace mixdecomp
