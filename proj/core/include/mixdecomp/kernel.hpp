#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mixdecomp {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using StateSet = std::vector<Index>;

// Compressed rows of the nonzero pattern; used by DP recursions and samplers.
struct SparseRows {
  std::vector<Index> offsets;
  std::vector<Index> cols;
  std::vector<double> vals;

  Index row_begin(Index x) const { return offsets[static_cast<std::size_t>(x)]; }
  Index row_end(Index x) const { return offsets[static_cast<std::size_t>(x) + 1]; }
  Index nnz() const { return static_cast<Index>(cols.size()); }
};

// Row-stochastic transition matrix. Immutable; copies share storage.
class StochasticKernel {
 public:
  static constexpr Index kMaxDenseStates = 50'000;

  explicit StochasticKernel(Matrix rows, std::vector<std::string> labels = {});

  // Builds a kernel from its off-diagonal part; the diagonal becomes
  // 1 - (row off-diagonal mass), which keeps tiny exit rates exact.
  static StochasticKernel from_off_diagonal(Matrix rows, std::vector<std::string> labels = {});

  Index size() const { return data_->rows.rows(); }
  const Matrix& matrix() const { return data_->rows; }
  double operator()(Index x, Index y) const { return data_->rows(x, y); }
  const std::vector<std::string>& labels() const { return data_->labels; }
  const SparseRows& sparse() const { return data_->sparse; }
  // Sum of K(x, y) over y != x, accumulated from the off-diagonal entries.
  double off_diagonal_mass(Index x) const { return data_->off_mass[static_cast<std::size_t>(x)]; }

 private:
  struct Data {
    Matrix rows;
    std::vector<std::string> labels;
    SparseRows sparse;
    std::vector<double> off_mass;
  };
  std::shared_ptr<const Data> data_;
};

class StationaryDistribution {
 public:
  explicit StationaryDistribution(Vector weights);

  Index size() const { return weights_.size(); }
  const Vector& weights() const { return weights_; }
  double operator()(Index x) const { return weights_(x); }
  double mass(const StateSet& set) const;

 private:
  Vector weights_;
};

struct ReversibilityCheck {
  bool reversible = false;
  double max_residual = 0.0;
};

struct MixingProfile {
  std::vector<double> distances;                 // d(t), t = 0..computed horizon
  std::map<double, long> epsilon_times;          // only epsilons reached within the horizon
  std::optional<long> mixing_time;               // tau(1/4); empty means HorizonExceeded
  bool horizon_exceeded = false;
  bool lower_bound_only = false;                 // starts restricted to a user list
};

struct MixingOptions {
  std::vector<double> epsilons{0.5, 0.25, 0.125, 0.0625};
  // Empty means all point-mass starts. Mandatory when n exceeds kMaxAllStarts.
  StateSet starts;
  // Stop once every requested epsilon has been reached.
  bool stop_when_resolved = true;
};

struct HittingTimeTable {
  StateSet target;
  Vector expected;
  // tail(t, x) = P_x[tau_A > t] for t = 0..horizon; empty when horizon = 0.
  Matrix tail;
  std::vector<double> max_tail;
  bool submultiplicative_checked = false;
};

inline constexpr Index kMaxAllStarts = 2000;
inline constexpr Index kMaxDirectStationary = 5000;

bool is_irreducible(const StochasticKernel& kernel);
// States from which some state of `target` is reachable (target included).
std::vector<bool> can_reach(const StochasticKernel& kernel, const StateSet& target);

StationaryDistribution stationary_distribution(const StochasticKernel& kernel);
ReversibilityCheck check_reversible(const StochasticKernel& kernel, const StationaryDistribution& pi);
StochasticKernel lazify(const StochasticKernel& kernel, double alpha);
StochasticKernel time_reversal(const StochasticKernel& kernel, const StationaryDistribution& pi);

double tv_distance(const Vector& a, const Vector& b);

MixingProfile mixing_profile(const StochasticKernel& kernel, const StationaryDistribution& pi,
                             long horizon, const MixingOptions& options = {});
// tau(1/4) with early stopping; empty if not reached within the horizon.
std::optional<long> mixing_time(const StochasticKernel& kernel, const StationaryDistribution& pi,
                                long horizon);

double relaxation_time(const StochasticKernel& kernel, const StationaryDistribution& pi);

Vector expected_hitting_times(const StochasticKernel& kernel, const StateSet& target);
HittingTimeTable hitting_analysis(const StochasticKernel& kernel, const StateSet& target,
                                  long horizon);

}  // namespace mixdecomp
