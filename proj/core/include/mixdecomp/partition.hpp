#pragma once

#include "mixdecomp/kernel.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace mixdecomp {

// Surjective assignment of states to blocks 0..n_blocks-1.
class Partition {
 public:
  explicit Partition(std::vector<Index> block_of);
  static Partition single_block(Index n_states);

  Index n_states() const { return static_cast<Index>(block_of_.size()); }
  Index n_blocks() const { return static_cast<Index>(members_.size()); }
  Index block_of(Index x) const { return block_of_[static_cast<std::size_t>(x)]; }
  const std::vector<Index>& assignment() const { return block_of_; }
  const StateSet& members(Index block) const { return members_[static_cast<std::size_t>(block)]; }
  StateSet union_of(const std::vector<Index>& blocks) const;
  std::vector<double> masses(const StationaryDistribution& pi) const;

 private:
  std::vector<Index> block_of_;
  std::vector<StateSet> members_;
};

// One line per state: `state_index block_index`, both 0-indexed.
Partition read_partition(std::istream& in, Index n_states);
Partition read_partition_file(const std::filesystem::path& path, Index n_states);
void write_partition(std::ostream& out, const Partition& partition);

}  // namespace mixdecomp
