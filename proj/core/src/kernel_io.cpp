#include "mixdecomp/kernel_io.hpp"

#include "mixdecomp/error.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace mixdecomp {

namespace {

struct Line {
  int number;
  std::string text;
};

std::vector<std::string> split(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(Errc::ParseError, "line " + std::to_string(line) + ": bad number '" + tok + "'");
  }
}

long parse_index(const std::string& tok, int line) {
  const double v = parse_double(tok, line);
  if (v != static_cast<double>(static_cast<long>(v)) || v < 0)
    fail(Errc::ParseError, "line " + std::to_string(line) + ": bad index '" + tok + "'");
  return static_cast<long>(v);
}

void fnv(std::uint64_t& h, std::uint64_t word) {
  for (int b = 0; b < 8; ++b) {
    h ^= (word >> (8 * b)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

StochasticKernel read_kernel(std::istream& in) {
  std::vector<Line> data;
  std::vector<std::pair<long, std::string>> labels;
  int number = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++number;
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (raw[first] == '#') {
      auto toks = split(raw.substr(first + 1));
      if (toks.size() >= 3 && toks[0] == "label") {
        const auto pos = raw.find(toks[2], raw.find(toks[1]) + toks[1].size());
        std::string text = raw.substr(pos);
        while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.pop_back();
        labels.emplace_back(parse_index(toks[1], number), text);
      }
      continue;
    }
    data.push_back({number, raw});
  }
  if (data.empty()) fail(Errc::ParseError, "no data lines");
  const auto header = split(data[0].text);
  if (header.empty() || header.size() > 2 || (header.size() == 2 && header[1] != "sparse"))
    fail(Errc::ParseError, "line " + std::to_string(data[0].number) + ": expected `n` or `n sparse`");
  const long n = parse_index(header[0], data[0].number);
  if (n < 1) fail(Errc::ParseError, "state count must be positive");
  if (n > StochasticKernel::kMaxDenseStates) fail(Errc::StateSpaceTooLarge, "too many states for a dense kernel");
  const bool sparse = header.size() == 2;

  Matrix m = Matrix::Zero(n, n);
  if (sparse) {
    for (std::size_t k = 1; k < data.size(); ++k) {
      const auto toks = split(data[k].text);
      if (toks.size() != 3) fail(Errc::ParseError, "line " + std::to_string(data[k].number) + ": expected `i j p`");
      const long i = parse_index(toks[0], data[k].number);
      const long j = parse_index(toks[1], data[k].number);
      if (i >= n || j >= n) fail(Errc::ParseError, "line " + std::to_string(data[k].number) + ": index out of range");
      m(i, j) += parse_double(toks[2], data[k].number);
    }
    for (long x = 0; x < n; ++x) {
      const double missing = 1.0 - m.row(x).sum();
      if (missing > 0.0) m(x, x) += missing;
    }
  } else {
    if (static_cast<long>(data.size()) != n + 1)
      fail(Errc::ParseError, "expected " + std::to_string(n) + " rows, found " + std::to_string(data.size() - 1));
    for (long x = 0; x < n; ++x) {
      const auto& line = data[static_cast<std::size_t>(x) + 1];
      const auto toks = split(line.text);
      if (static_cast<long>(toks.size()) != n)
        fail(Errc::ParseError, "line " + std::to_string(line.number) + ": expected " + std::to_string(n) + " entries");
      for (long y = 0; y < n; ++y) m(x, y) = parse_double(toks[static_cast<std::size_t>(y)], line.number);
    }
  }
  std::vector<std::string> names;
  if (!labels.empty()) {
    names.resize(static_cast<std::size_t>(n));
    for (long x = 0; x < n; ++x) names[static_cast<std::size_t>(x)] = std::to_string(x);
    for (auto& [i, text] : labels) {
      if (i >= n) fail(Errc::ParseError, "label index out of range");
      names[static_cast<std::size_t>(i)] = text;
    }
  }
  return StochasticKernel(std::move(m), std::move(names));
}

StochasticKernel read_kernel_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path.string());
  return read_kernel(in);
}

void write_kernel(std::ostream& out, const StochasticKernel& kernel, bool sparse) {
  const Index n = kernel.size();
  const auto& labels = kernel.labels();
  for (std::size_t x = 0; x < labels.size(); ++x) out << "# label " << x << ' ' << labels[x] << '\n';
  out << std::setprecision(17);
  if (sparse) {
    out << n << " sparse\n";
    const auto& s = kernel.sparse();
    for (Index x = 0; x < n; ++x)
      for (Index k = s.row_begin(x); k < s.row_end(x); ++k)
        out << x << ' ' << s.cols[static_cast<std::size_t>(k)] << ' ' << s.vals[static_cast<std::size_t>(k)] << '\n';
    return;
  }
  out << n << '\n';
  for (Index x = 0; x < n; ++x) {
    for (Index y = 0; y < n; ++y) out << (y ? " " : "") << kernel(x, y);
    out << '\n';
  }
}

std::string kernel_hash(const StochasticKernel& kernel) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv(h, static_cast<std::uint64_t>(kernel.size()));
  const Matrix& m = kernel.matrix();
  for (Index x = 0; x < m.rows(); ++x)
    for (Index y = 0; y < m.cols(); ++y) fnv(h, std::bit_cast<std::uint64_t>(m(x, y)));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mixdecomp
