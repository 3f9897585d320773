#include "mixdecomp/partition.hpp"

#include "mixdecomp/error.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mixdecomp {

Partition::Partition(std::vector<Index> block_of) : block_of_(std::move(block_of)) {
  require(!block_of_.empty(), Errc::InvalidPartition, "partition of an empty state space");
  Index n_blocks = 0;
  for (Index b : block_of_) {
    require(b >= 0, Errc::InvalidPartition, "negative block index");
    n_blocks = std::max(n_blocks, b + 1);
  }
  members_.resize(static_cast<std::size_t>(n_blocks));
  for (std::size_t x = 0; x < block_of_.size(); ++x)
    members_[static_cast<std::size_t>(block_of_[x])].push_back(static_cast<Index>(x));
  for (Index b = 0; b < n_blocks; ++b)
    require(!members_[static_cast<std::size_t>(b)].empty(), Errc::InvalidPartition,
            "block " + std::to_string(b) + " is empty");
}

Partition Partition::single_block(Index n_states) {
  return Partition(std::vector<Index>(static_cast<std::size_t>(n_states), 0));
}

StateSet Partition::union_of(const std::vector<Index>& blocks) const {
  StateSet out;
  for (Index b : blocks) {
    require(b >= 0 && b < n_blocks(), Errc::InvalidPartition, "block index out of range");
    const auto& m = members(b);
    out.insert(out.end(), m.begin(), m.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> Partition::masses(const StationaryDistribution& pi) const {
  require(pi.size() == n_states(), Errc::DimensionMismatch, "pi length differs from partition size");
  std::vector<double> m(static_cast<std::size_t>(n_blocks()), 0.0);
  for (Index x = 0; x < n_states(); ++x) m[static_cast<std::size_t>(block_of(x))] += pi(x);
  return m;
}

Partition read_partition(std::istream& in, Index n_states) {
  std::vector<Index> block_of(static_cast<std::size_t>(n_states), -1);
  int number = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++number;
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos || raw[first] == '#') continue;
    std::istringstream is(raw);
    long x = -1, b = -1;
    std::string extra;
    if (!(is >> x >> b) || (is >> extra))
      fail(Errc::ParseError, "line " + std::to_string(number) + ": expected `state_index block_index`");
    if (x < 0 || x >= n_states || b < 0)
      fail(Errc::ParseError, "line " + std::to_string(number) + ": index out of range");
    if (block_of[static_cast<std::size_t>(x)] != -1)
      fail(Errc::ParseError, "line " + std::to_string(number) + ": state assigned twice");
    block_of[static_cast<std::size_t>(x)] = b;
  }
  for (Index x = 0; x < n_states; ++x)
    if (block_of[static_cast<std::size_t>(x)] < 0)
      fail(Errc::InvalidPartition, "state " + std::to_string(x) + " has no block");
  return Partition(std::move(block_of));
}

Partition read_partition_file(const std::filesystem::path& path, Index n_states) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path.string());
  return read_partition(in, n_states);
}

void write_partition(std::ostream& out, const Partition& partition) {
  for (Index x = 0; x < partition.n_states(); ++x) out << x << ' ' << partition.block_of(x) << '\n';
}

}  // namespace mixdecomp
