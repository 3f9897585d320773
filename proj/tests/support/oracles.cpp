#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace oracle {

RandomChain random_reversible(int n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::bernoulli_distribution extra(0.35);
  Matrix c = Matrix::Zero(n, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), gen);
  for (int k = 1; k < n; ++k) {   // random spanning path keeps it connected
    const int a = order[static_cast<std::size_t>(k - 1)], b = order[static_cast<std::size_t>(k)];
    c(a, b) = c(b, a) = u(gen);
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (c(a, b) == 0.0 && extra(gen)) c(a, b) = c(b, a) = u(gen);
  for (int a = 0; a < n; ++a) c(a, a) = u(gen);
  RandomChain out;
  out.K = Matrix(n, n);
  out.pi = Vector(n);
  for (int a = 0; a < n; ++a) {
    const double s = c.row(a).sum();
    out.K.row(a) = c.row(a) / s;
    out.pi(a) = s;
  }
  out.pi /= out.pi.sum();
  return out;
}

std::vector<Index> random_partition(int n, int blocks, std::mt19937_64& gen) {
  std::vector<Index> b(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) b[static_cast<std::size_t>(x)] = x < blocks ? x : static_cast<Index>(gen() % blocks);
  std::shuffle(b.begin(), b.end(), gen);
  return b;
}

Vector stationary(const Matrix& K) {
  const Index n = K.rows();
  Matrix L = 0.5 * (Matrix::Identity(n, n) + K);
  Vector p = Vector::Constant(n, 1.0 / n);
  for (int it = 0; it < 2000000; ++it) {
    Vector q = (p.transpose() * L).transpose();
    q /= q.sum();
    const double diff = (q - p).cwiseAbs().sum();
    p = q;
    if (diff < 1e-15) break;
  }
  return p;
}

long mixing_time(const Matrix& K, const Vector& pi, long horizon) {
  Matrix P = K;
  for (long t = 1; t <= horizon; ++t) {
    double worst = 0.0;
    for (Index x = 0; x < K.rows(); ++x) worst = std::max(worst, 0.5 * (P.row(x).transpose() - pi).cwiseAbs().sum());
    if (worst < 0.25) return t;
    P = P * K;
  }
  return -1;
}

Matrix trace_by_absorption(const Matrix& K, const std::vector<Index>& A) {
  const Index n = K.rows();
  std::vector<bool> inA(static_cast<std::size_t>(n), false);
  for (Index a : A) inA[static_cast<std::size_t>(a)] = true;
  const auto m = static_cast<Index>(A.size());
  Matrix out = Matrix::Zero(m, m);
  for (Index r = 0; r < m; ++r) {
    Vector mass = K.row(A[static_cast<std::size_t>(r)]).transpose();
    for (int it = 0; it < 10000000; ++it) {
      Vector next = Vector::Zero(n);
      double left = 0.0;
      for (Index y = 0; y < n; ++y) {
        if (mass(y) == 0.0) continue;
        if (inA[static_cast<std::size_t>(y)]) {
          const auto col = std::find(A.begin(), A.end(), y) - A.begin();
          out(r, col) += mass(y);
        } else {
          next += mass(y) * K.row(y).transpose();
          left += mass(y);
        }
      }
      mass = next;
      if (left < 1e-16) break;
    }
  }
  return out;
}

Matrix projected(const Matrix& K, const Vector& pi, const std::vector<Index>& block_of, Index n_blocks) {
  Matrix flow = Matrix::Zero(n_blocks, n_blocks);
  Vector mass = Vector::Zero(n_blocks);
  for (Index x = 0; x < K.rows(); ++x) {
    mass(block_of[static_cast<std::size_t>(x)]) += pi(x);
    for (Index y = 0; y < K.cols(); ++y)
      flow(block_of[static_cast<std::size_t>(x)], block_of[static_cast<std::size_t>(y)]) += pi(x) * K(x, y);
  }
  for (Index i = 0; i < n_blocks; ++i) flow.row(i) /= mass(i);
  return flow;
}

Vector hitting_by_iteration(const Matrix& K, const std::vector<Index>& A) {
  const Index n = K.rows();
  std::vector<bool> inA(static_cast<std::size_t>(n), false);
  for (Index a : A) inA[static_cast<std::size_t>(a)] = true;
  Vector h = Vector::Zero(n);
  for (long it = 0; it < 50000000; ++it) {
    Vector g = Vector::Ones(n) + K * h;
    for (Index x = 0; x < n; ++x)
      if (inA[static_cast<std::size_t>(x)]) g(x) = 0.0;
    const double diff = (g - h).cwiseAbs().maxCoeff();
    h = g;
    if (diff < 1e-11 * std::max(1.0, h.maxCoeff())) break;
  }
  return h;
}

Vector hitting_tail(const Matrix& K, const std::vector<Index>& A, long t) {
  const Index n = K.rows();
  std::vector<bool> inA(static_cast<std::size_t>(n), false);
  for (Index a : A) inA[static_cast<std::size_t>(a)] = true;
  // s(x) = P_x[tau_A > t], s_0 = 1 off A; s_{k+1}(x) = sum_y K(x,y) s_k(y) off A.
  Vector s(n);
  for (Index x = 0; x < n; ++x) s(x) = inA[static_cast<std::size_t>(x)] ? 0.0 : 1.0;
  for (long k = 0; k < t; ++k) {
    Vector next = K * s;
    for (Index x = 0; x < n; ++x)
      if (inA[static_cast<std::size_t>(x)]) next(x) = 0.0;
    s = next;
  }
  return s;
}

Vector occupation_tail_by_paths(const Matrix& K, const std::vector<Index>& block_of, Index block, long T, long t) {
  const Index n = K.rows();
  Vector out = Vector::Zero(n);
  std::function<void(Index, long, long, double, Index)> walk = [&](Index x, long step, long count, double p,
                                                                  Index start) {
    if (p == 0.0) return;
    if (step == T) {
      if (count < t) out(start) += p;
      return;
    }
    for (Index y = 0; y < n; ++y)
      walk(y, step + 1, count + (block_of[static_cast<std::size_t>(y)] == block ? 1 : 0), p * K(x, y), start);
  };
  for (Index x = 0; x < n; ++x) walk(x, 0, 0, 1.0, x);
  return out;
}

Vector exit_law(const Matrix& K, const std::vector<Index>& block_of, Index n_blocks, Index x) {
  const Index b = block_of[static_cast<std::size_t>(x)];
  Vector law = Vector::Zero(n_blocks);
  Vector mass = Vector::Zero(K.rows());
  mass(x) = 1.0;
  for (int it = 0; it < 10000000; ++it) {
    Vector next = Vector::Zero(K.rows());
    double left = 0.0;
    for (Index y = 0; y < K.rows(); ++y) {
      if (mass(y) == 0.0) continue;
      for (Index z = 0; z < K.cols(); ++z) {
        const double p = mass(y) * K(y, z);
        if (block_of[static_cast<std::size_t>(z)] == b)
          next(z) += p;
        else
          law(block_of[static_cast<std::size_t>(z)]) += p;
      }
    }
    left = next.sum();
    mass = next;
    if (left < 1e-16) break;
  }
  return law;
}

double w1_path(const Vector& mu, const Vector& nu) {
  double cdf = 0.0, total = 0.0;
  for (Index i = 0; i + 1 < mu.size(); ++i) {
    cdf += mu(i) - nu(i);
    total += std::abs(cdf);
  }
  return total;
}

double w1_discrete(const Vector& mu, const Vector& nu) { return 0.5 * (mu - nu).cwiseAbs().sum(); }

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  // Centered form, computed differently from the library's normal equations.
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    den += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return num / den;
}

double wilson_upper(long successes, long n, double z) {
  const double p = static_cast<double>(successes) / static_cast<double>(n);
  const double z2 = z * z, nn = static_cast<double>(n);
  return (p + z2 / (2 * nn) + z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn))) / (1 + z2 / nn);
}

}  // namespace oracle
