#pragma once

#include "mixdecomp/kernel.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace mixdecomp {

// Text format:
//   dense   first data line `n`, then n rows of n probabilities
//   sparse  first data line `n sparse`, then lines `i j p` (0-indexed);
//           mass missing from a row is put on its diagonal
// Lines starting with `#` are comments, except `# label <i> <text>`, which
// names state i.
StochasticKernel read_kernel(std::istream& in);
StochasticKernel read_kernel_file(const std::filesystem::path& path);
void write_kernel(std::ostream& out, const StochasticKernel& kernel, bool sparse = false);

// FNV-1a over the state count and the IEEE bit patterns of all entries.
std::string kernel_hash(const StochasticKernel& kernel);

}  // namespace mixdecomp
