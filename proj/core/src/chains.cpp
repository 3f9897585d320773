#include "mixdecomp/chains.hpp"

#include "mixdecomp/decomposition.hpp"
#include "mixdecomp/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>

namespace mixdecomp {

namespace {

std::shared_ptr<const Sampler> sampler_for(const StochasticKernel& kernel) {
  return std::make_shared<KernelSampler>(kernel);
}

}  // namespace

ChainInstance pince_nez(int m) {
  require(m >= 3, Errc::InvalidParameter, "pince_nez needs m >= 3");
  const Index n = 2 * m;
  Matrix off = Matrix::Zero(n, n);
  constexpr double w = 1.0 / 6.0;
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < m; ++k) {
      const Index a = c * m + k, b = c * m + (k + 1) % m;
      off(a, b) = off(b, a) = w;
    }
  off(0, m) = off(m, 0) = w;
  ChainInstance out;
  out.family = "pince_nez";
  out.params = {{"m", m}};
  out.kernel = StochasticKernel::from_off_diagonal(std::move(off));
  out.sampler = sampler_for(*out.kernel);
  std::vector<Index> assign(static_cast<std::size_t>(n));
  for (Index x = 0; x < n; ++x) assign[static_cast<std::size_t>(x)] = x < m ? 0 : 1;
  out.partition = Partition(std::move(assign));
  out.pi = StationaryDistribution(Vector::Constant(n, 1.0 / static_cast<double>(n)));
  return out;
}

Graph random_regular_graph(int m, int d, std::uint64_t seed) {
  require(d >= 1 && d < m && (static_cast<long>(m) * d) % 2 == 0, Errc::InvalidParameter,
          "need 1 <= d < m with d m even");
  for (std::uint64_t round = 0; round < 100; ++round) {
    Rng rng(seed, round);
    std::vector<int> points;
    for (int v = 0; v < m; ++v)
      for (int k = 0; k < d; ++k) points.push_back(v);
    std::vector<std::set<int>> adj(static_cast<std::size_t>(m));
    bool stuck = false;
    while (!points.empty() && !stuck) {
      bool placed = false;
      const std::size_t budget = 50 * points.size();
      for (std::size_t attempt = 0; attempt < budget && !placed; ++attempt) {
        const auto a = static_cast<std::size_t>(rng.below(points.size()));
        const auto b = static_cast<std::size_t>(rng.below(points.size()));
        const int u = points[a], v = points[b];
        if (a == b || u == v || adj[static_cast<std::size_t>(u)].count(v)) continue;
        adj[static_cast<std::size_t>(u)].insert(v);
        adj[static_cast<std::size_t>(v)].insert(u);
        // Remove the higher position first so the lower one stays valid.
        for (std::size_t pos : {std::max(a, b), std::min(a, b)}) {
          points[pos] = points.back();
          points.pop_back();
        }
        placed = true;
      }
      if (!placed) stuck = true;
    }
    if (stuck) continue;
    Graph g(static_cast<std::size_t>(m));
    for (int v = 0; v < m; ++v)
      g[static_cast<std::size_t>(v)].assign(adj[static_cast<std::size_t>(v)].begin(), adj[static_cast<std::size_t>(v)].end());
    return g;
  }
  fail(Errc::GraphGenerationFailed, "pairing model failed in 100 rounds");
}

double second_eigenvalue(const Graph& graph) {
  const auto m = static_cast<Index>(graph.size());
  require(m >= 2, Errc::InvalidParameter, "graph needs at least two vertices");
  const auto d = graph.front().size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Index v = 0; v < m; ++v) {
    require(graph[static_cast<std::size_t>(v)].size() == d, Errc::InvalidParameter, "graph is not regular");
    for (int u : graph[static_cast<std::size_t>(v)]) a(v, u) = 1.0 / static_cast<double>(d);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(m - 2);
}

ChainInstance expander_pair(int m, int d, double epsilon, std::uint64_t seed) {
  require(d >= 3 && (static_cast<long>(m) * d) % 2 == 0 && m > d, Errc::InvalidParameter,
          "expander_pair needs d >= 3, d m even and m > d");
  require(epsilon > 0.0 && epsilon <= std::min(0.25, 1.0 / std::log(static_cast<double>(m))) * (1.0 + 1e-12),
          Errc::EpsilonTooLarge, "epsilon must lie in (0, min(1/4, 1/log m)]");
  Graph g;
  bool found = false;
  for (std::uint64_t attempt = 0; attempt < 100 && !found; ++attempt) {
    g = random_regular_graph(m, d, seed + 0x9e3779b97f4a7c15ULL * attempt);
    found = second_eigenvalue(g) <= kExpanderLambdaCap;
  }
  require(found, Errc::GraphGenerationFailed, "no graph met the spectral floor in 100 rounds");
  const Index n = 2 * m;
  Matrix off = Matrix::Zero(n, n);
  for (int u = 0; u < m; ++u) {
    for (int v : g[static_cast<std::size_t>(u)]) off(u, v) = 1.0 / (4.0 * d);
    off(u, m + u) = 0.5;
    off(m + u, u) = epsilon;
  }
  ChainInstance out;
  out.family = "expander_pair";
  out.params = {{"m", m}, {"d", d}, {"epsilon", epsilon}, {"seed", static_cast<double>(seed)}};
  out.kernel = StochasticKernel::from_off_diagonal(std::move(off));
  out.sampler = sampler_for(*out.kernel);
  std::vector<Index> assign(static_cast<std::size_t>(n));
  for (Index x = 0; x < n; ++x) assign[static_cast<std::size_t>(x)] = x % m;
  out.partition = Partition(std::move(assign));
  Vector pi(n);
  for (Index u = 0; u < m; ++u) {
    pi(u) = epsilon / (epsilon + 0.5) / m;
    pi(m + u) = 0.5 / (epsilon + 0.5) / m;
  }
  out.pi = StationaryDistribution(pi);
  for (Index u = 0; u < m; ++u) out.marked.push_back(u);
  out.graph = std::move(g);
  return out;
}

ChainInstance toy_kcip(int m, int d) {
  require(m >= 2 && d >= 1, Errc::InvalidParameter, "toy_kcip needs m >= 2 and d >= 1");
  const Index n = 3 * m;
  const double md = std::pow(static_cast<double>(m), d);
  const double r = 1.0 / (6.0 * md);
  auto idx = [](int i, int j) { return static_cast<Index>(3 * (i - 1) + (j - 1)); };
  Matrix off = Matrix::Zero(n, n);
  for (int i = 1; i <= m; ++i) {
    if (i < m) off(idx(i, 1), idx(i + 1, 1)) = 1.0 / 6.0;
    if (i > 1) off(idx(i, 1), idx(i - 1, 1)) = 1.0 / 3.0;
    off(idx(i, 1), idx(i, 2)) = 1.0 / 6.0;
    off(idx(i, 2), idx(i, 1)) = r;
    off(idx(i, 2), idx(i, 3)) = r;
    off(idx(i, 3), idx(i, 2)) = r;
  }
  ChainInstance out;
  out.family = "toy_kcip";
  out.params = {{"m", m}, {"d", d}};
  out.kernel = StochasticKernel::from_off_diagonal(std::move(off));
  out.sampler = sampler_for(*out.kernel);
  std::vector<Index> assign(static_cast<std::size_t>(n));
  for (Index x = 0; x < n; ++x) assign[static_cast<std::size_t>(x)] = x / 3;
  out.partition = Partition(std::move(assign));
  // pi proportional to 2^-i (1, m^d, m^d).
  Vector pi(n);
  for (int i = 1; i <= m; ++i) {
    const double base = std::ldexp(1.0, -i);
    pi(idx(i, 1)) = base;
    pi(idx(i, 2)) = base * md;
    pi(idx(i, 3)) = base * md;
  }
  out.pi = StationaryDistribution(pi / pi.sum());
  for (int i = 1; i <= m; ++i) out.marked.push_back(idx(i, 1));
  return out;
}

Graph cycle_graph(int n) {
  require(n >= 3, Errc::InvalidParameter, "cycle needs at least 3 vertices");
  Graph g(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) g[static_cast<std::size_t>(v)] = {(v + n - 1) % n, (v + 1) % n};
  return g;
}

Graph lattice_graph(int L, int dim) {
  require(L >= 2 && dim >= 1, Errc::InvalidParameter, "lattice needs L >= 2 and dim >= 1");
  int n = 1;
  for (int k = 0; k < dim; ++k) n *= L;
  Graph g(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    std::set<int> nb;
    int stride = 1;
    for (int k = 0; k < dim; ++k) {
      const int coord = (v / stride) % L;
      for (int s : {-1, 1}) {
        const int c2 = (coord + s + L) % L;
        const int u = v + (c2 - coord) * stride;
        if (u != v) nb.insert(u);
      }
      stride *= L;
    }
    g[static_cast<std::size_t>(v)].assign(nb.begin(), nb.end());
  }
  return g;
}

KcipSampler::KcipSampler(Graph neighborhood, double p) : nbhd_(std::move(neighborhood)), p_(p) {}

State KcipSampler::step(State x, Rng& rng) const {
  const auto v = rng.below(nbhd_.size());
  const double lambda = rng.uniform();
  bool active = false;
  for (int u : nbhd_[v]) active |= ((x >> u) & 1U) != 0;
  if (!active) return x;
  const State bit = State{1} << v;
  return lambda < p_ ? (x | bit) : (x & ~bit);
}

namespace {

bool kcip_isolated(State x, const Graph& nbhd) {
  for (std::size_t u = 0; u < nbhd.size(); ++u) {
    if (!((x >> u) & 1U)) continue;
    for (int v : nbhd[u])
      if ((x >> v) & 1U) return false;
  }
  return true;
}

// Raw block: k - 1 for k <= n_cap isolated particles, n_cap for the remainder.
Index kcip_raw_block(State x, const Graph& nbhd, int n_cap) {
  const int k = std::popcount(x);
  if (k <= n_cap && kcip_isolated(x, nbhd)) return k - 1;
  return n_cap;
}

}  // namespace

ChainInstance kcip(const Graph& graph, const KcipOptions& options) {
  const auto V = static_cast<int>(graph.size());
  require(V >= 2 && V <= kMaxKcipVertices, Errc::InvalidParameter, "KCIP needs 2..64 vertices");
  require(options.n_cap >= 1, Errc::InvalidParameter, "n_cap must be positive");
  // Connectivity of the underlying graph.
  {
    std::vector<bool> seen(static_cast<std::size_t>(V), false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u : graph[static_cast<std::size_t>(v)]) {
        require(u >= 0 && u < V && u != v, Errc::InvalidParameter, "bad adjacency entry");
        if (!seen[static_cast<std::size_t>(u)]) {
          seen[static_cast<std::size_t>(u)] = true;
          stack.push_back(u);
        }
      }
    }
    require(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }), Errc::InvalidParameter,
            "KCIP graph must be connected");
  }
  const double p = options.c / V;
  require(p > 0.0 && p < 1.0, Errc::InvalidParameter, "density c / |V| must lie in (0, 1)");
  const Graph nbhd = options.neighborhood.value_or(graph);
  require(static_cast<int>(nbhd.size()) == V, Errc::DimensionMismatch, "neighborhood must cover every vertex");

  ChainInstance out;
  out.family = "kcip";
  out.params = {{"vertices", V}, {"c", options.c}, {"p", p}, {"n_cap", options.n_cap}};
  out.graph = graph;
  out.sampler = std::make_shared<KcipSampler>(nbhd, p);
  const int n_cap = options.n_cap;
  out.blocks = BlockMap{n_cap + 1, [nbhd, n_cap](State x) { return kcip_raw_block(x, nbhd, n_cap); }};
  if (!options.explicit_kernel) return out;

  require(V <= 20, Errc::StateSpaceTooLarge, "explicit KCIP needs at most 20 vertices");
  const Index n = (Index{1} << V) - 1;
  require(n <= StochasticKernel::kMaxDenseStates, Errc::StateSpaceTooLarge,
          "explicit KCIP kernel exceeds the dense state limit");
  Matrix off = Matrix::Zero(n, n);
  const double share = 1.0 / V;
  for (Index i = 0; i < n; ++i) {
    const auto x = static_cast<State>(i + 1);
    for (int v = 0; v < V; ++v) {
      bool active = false;
      for (int u : nbhd[static_cast<std::size_t>(v)]) active |= ((x >> u) & 1U) != 0;
      if (!active) continue;
      const State bit = State{1} << v;
      const State on = x | bit, offm = x & ~bit;
      if (on != x) off(i, static_cast<Index>(on) - 1) += share * p;
      if (offm != x) off(i, static_cast<Index>(offm) - 1) += share * (1.0 - p);
    }
  }
  out.kernel = StochasticKernel::from_off_diagonal(std::move(off));
  out.sampler = sampler_for(*out.kernel);

  // Renumber to drop empty blocks.
  std::vector<Index> raw(static_cast<std::size_t>(n));
  std::vector<Index> remap(static_cast<std::size_t>(n_cap + 1), -1);
  for (Index i = 0; i < n; ++i) raw[static_cast<std::size_t>(i)] = kcip_raw_block(static_cast<State>(i + 1), nbhd, n_cap);
  for (Index b : raw) remap[static_cast<std::size_t>(b)] = 0;
  Index next = 0;
  for (auto& r : remap)
    if (r == 0) r = next++;
  for (auto& b : raw) b = remap[static_cast<std::size_t>(b)];
  out.partition = Partition(std::move(raw));
  out.blocks = block_map(out.partition);

  Vector pi(n);
  const double ratio = p / (1.0 - p);
  for (Index i = 0; i < n; ++i) pi(i) = std::pow(ratio, std::popcount(static_cast<State>(i + 1)));
  out.pi = StationaryDistribution(pi / pi.sum());
  return out;
}

double torus_weight(int u, int m, int l, double C) {
  const int h = std::min(u, 2 * l - 1 - u);
  return std::exp(-C * h * std::log(static_cast<double>(m)));
}

double torus_trace_mass(int m, int l, double C, int k) {
  require(m >= 2 && l >= 2 && C > 1.0 && k >= 0 && k <= l - 1, Errc::InvalidParameter, "bad torus parameters");
  double total = 0.0, kept = 0.0;
  for (int u = 0; u < 2 * l; ++u) {
    const double w = torus_weight(u, m, l, C);
    total += w;
    if (u <= l - 1 - k || u >= l + k) kept += w;
  }
  return std::pow(kept / total, m);
}

Index torus_block(State x, int m, int l) {
  Index z = 0;
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(x % static_cast<State>(2 * l)) >= l) z |= Index{1} << i;
    x /= static_cast<State>(2 * l);
  }
  return z;
}

TorusSampler::TorusSampler(int m, int l, double C)
    : m_(m), l_(l), accept_(std::exp(-C * std::log(static_cast<double>(m)))) {}

State TorusSampler::step(State x, Rng& rng) const {
  const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(m_)));
  const auto s = static_cast<int>(rng.below(3)) - 1;
  const double u = rng.uniform();
  if (s == 0) return x;
  const auto side = static_cast<State>(2 * l_);
  State stride = 1;
  for (int k = 0; k < j; ++k) stride *= side;
  const int c = static_cast<int>((x / stride) % side);
  const int c2 = (c + s + 2 * l_) % (2 * l_);
  const int dh = std::min(c2, 2 * l_ - 1 - c2) - std::min(c, 2 * l_ - 1 - c);
  // H moves by at most one per step.
  if (dh > 0 && !(u < accept_)) return x;
  return x - static_cast<State>(c) * stride + static_cast<State>(c2) * stride;
}

ChainInstance torus_metropolis(const TorusOptions& o) {
  require(o.m >= 2 && o.l >= 2 && o.C > 1.0, Errc::InvalidParameter, "torus needs m >= 2, l >= 2, C > 1");
  if (o.k_trace) require(*o.k_trace >= 0 && *o.k_trace <= o.l - 1, Errc::InvalidParameter, "k must lie in [0, l - 1]");
  require(o.m <= 20, Errc::StateSpaceTooLarge, "torus dimension above 20 is unsupported");
  const int side = 2 * o.l;
  const double full = std::pow(static_cast<double>(side), o.m);

  ChainInstance out;
  out.family = "torus_metropolis";
  out.params = {{"m", o.m}, {"l", o.l}, {"C", o.C}};
  if (o.k_trace) out.params["k"] = *o.k_trace;
  out.sampler = std::make_shared<TorusSampler>(o.m, o.l, o.C);
  const int m = o.m, l = o.l;
  out.blocks = BlockMap{Index{1} << m, [m, l](State x) { return torus_block(x, m, l); }};
  if (full > 1e6 || full > static_cast<double>(StochasticKernel::kMaxDenseStates)) {
    require(!o.k_trace, Errc::StateSpaceTooLarge, "traced torus needs an explicit kernel");
    return out;
  }
  const auto n = static_cast<Index>(full);
  const double accept = std::exp(-o.C * std::log(static_cast<double>(o.m)));
  Matrix off = Matrix::Zero(n, n);
  std::vector<int> coord(static_cast<std::size_t>(m));
  for (Index x = 0; x < n; ++x) {
    Index rest = x;
    for (int i = 0; i < m; ++i) {
      coord[static_cast<std::size_t>(i)] = static_cast<int>(rest % side);
      rest /= side;
    }
    Index stride = 1;
    for (int i = 0; i < m; ++i) {
      const int c = coord[static_cast<std::size_t>(i)];
      for (int s : {-1, 1}) {
        const int c2 = (c + s + side) % side;
        const int dh = std::min(c2, side - 1 - c2) - std::min(c, side - 1 - c);
        const Index y = x + static_cast<Index>(c2 - c) * stride;
        off(x, y) += 1.0 / (3.0 * m) * (dh > 0 ? std::pow(accept, dh) : 1.0);
      }
      stride *= side;
    }
  }
  const StochasticKernel K = StochasticKernel::from_off_diagonal(std::move(off));
  Vector pi(n);
  {
    double z1 = 0.0;
    for (int u = 0; u < side; ++u) z1 += torus_weight(u, m, l, o.C);
    for (Index x = 0; x < n; ++x) {
      Index rest = x;
      double w = 1.0;
      for (int i = 0; i < m; ++i) {
        w *= torus_weight(static_cast<int>(rest % side), m, l, o.C) / z1;
        rest /= side;
      }
      pi(x) = w;
    }
  }

  if (!o.k_trace) {
    out.kernel = K;
    out.sampler = sampler_for(K);
    std::vector<Index> assign(static_cast<std::size_t>(n));
    for (Index x = 0; x < n; ++x) assign[static_cast<std::size_t>(x)] = torus_block(static_cast<State>(x), m, l);
    out.partition = Partition(std::move(assign));
    out.pi = StationaryDistribution(pi);
    return out;
  }

  const int k = *o.k_trace;
  StateSet subset;
  for (Index x = 0; x < n; ++x) {
    Index rest = x;
    bool keep = true;
    for (int i = 0; i < m && keep; ++i) {
      const int c = static_cast<int>(rest % side);
      keep = c <= l - 1 - k || c >= l + k;
      rest /= side;
    }
    if (keep) subset.push_back(x);
  }
  out.kernel = trace_kernel(K, subset);
  out.sampler = sampler_for(*out.kernel);
  std::vector<Index> assign;
  Vector pi_trace(static_cast<Index>(subset.size()));
  for (std::size_t r = 0; r < subset.size(); ++r) {
    assign.push_back(torus_block(static_cast<State>(subset[r]), m, l));
    pi_trace(static_cast<Index>(r)) = pi(subset[r]);
  }
  out.partition = Partition(std::move(assign));
  out.pi = StationaryDistribution(pi_trace / pi_trace.sum());
  out.marked = subset;
  out.blocks = block_map(out.partition);
  return out;
}

ChainSpec parse_chain_spec(const std::string& text) {
  ChainSpec spec;
  const auto colon = text.find(':');
  spec.family = text.substr(0, colon);
  require(!spec.family.empty(), Errc::ConfigInvalid, "chain spec needs a family name");
  if (colon == std::string::npos) return spec;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    require(eq != std::string::npos && eq > 0, Errc::ConfigInvalid, "chain parameter '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "seed") {
      try {
        spec.seed = std::stoull(value);
      } catch (const std::exception&) {
        fail(Errc::ConfigInvalid, "seed '" + value + "' is not an unsigned integer");
      }
    } else {
      spec.params[key] = value;
    }
  }
  return spec;
}

namespace {

class ParamReader {
 public:
  explicit ParamReader(const ChainSpec& spec) : spec_(spec) {}
  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    used_.insert(key);
    const auto it = spec_.params.find(key);
    if (it == spec_.params.end()) {
      require(fallback.has_value(), Errc::ConfigInvalid, spec_.family + " needs parameter " + key);
      return *fallback;
    }
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      require(pos == it->second.size(), Errc::ConfigInvalid, "trailing characters");
      return v;
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(Errc::ConfigInvalid, "parameter " + key + " = '" + it->second + "' is not a number");
    }
  }
  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    const double v = number(key, fallback ? std::optional<double>(*fallback) : std::nullopt);
    require(v == std::floor(v) && std::abs(v) < 1e9, Errc::ConfigInvalid, "parameter " + key + " must be an integer");
    return static_cast<int>(v);
  }
  bool has(const std::string& key) const { return spec_.params.count(key) > 0; }
  std::string text(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    const auto it = spec_.params.find(key);
    return it == spec_.params.end() ? fallback : it->second;
  }
  void finish() const {
    for (const auto& [k, v] : spec_.params)
      require(used_.count(k) > 0, Errc::ConfigInvalid, "unknown parameter '" + k + "' for " + spec_.family);
  }

 private:
  const ChainSpec& spec_;
  std::set<std::string> used_;
};

}  // namespace

ChainInstance build_chain(const ChainSpec& spec) {
  ParamReader p(spec);
  ChainInstance out;
  try {
    if (spec.family == "pince_nez") {
      out = pince_nez(p.integer("m"));
    } else if (spec.family == "expander_pair") {
      const int m = p.integer("m");
      const double eps = p.number("epsilon", std::min(0.25, 1.0 / std::log(static_cast<double>(std::max(m, 2)))));
      out = expander_pair(m, p.integer("d", 6), eps, spec.seed.value_or(1));
    } else if (spec.family == "toy_kcip") {
      out = toy_kcip(p.integer("m"), p.integer("d", 1));
    } else if (spec.family == "kcip") {
      const std::string graph = p.text("graph", "cycle");
      Graph g;
      if (graph == "cycle") {
        g = cycle_graph(p.integer("n", 5));
      } else if (graph == "lattice") {
        g = lattice_graph(p.integer("L", 2), p.integer("dim", 3));
      } else {
        fail(Errc::ConfigInvalid, "kcip graph must be cycle or lattice");
      }
      KcipOptions o;
      o.c = p.number("c", 1.0);
      o.n_cap = p.integer("n_cap", 3);
      o.explicit_kernel = p.integer("explicit", 1) != 0;
      out = kcip(g, o);
    } else if (spec.family == "torus_metropolis") {
      TorusOptions o;
      o.m = p.integer("m");
      o.l = p.integer("l", 3);
      o.C = p.number("C", 7.0);
      if (p.has("k")) o.k_trace = p.integer("k");
      out = torus_metropolis(o);
    } else {
      fail(Errc::ConfigInvalid, "unknown chain family '" + spec.family + "'");
    }
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigInvalid) throw;
    fail(Errc::ConfigInvalid, std::string(errc_name(e.code())) + ": " + e.what());
  }
  p.finish();
  return out;
}

}  // namespace mixdecomp
