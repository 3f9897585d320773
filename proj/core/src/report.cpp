#include "mixdecomp/report.hpp"

#include "mixdecomp/contraction.hpp"
#include "mixdecomp/decomposition.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/evaluate.hpp"
#include "mixdecomp/kernel_io.hpp"
#include "mixdecomp/partition.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mixdecomp {

using ojson = nlohmann::ordered_json;

namespace {

// JSON has no infinities; non-finite values travel as strings.
ojson num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double from_num(const ojson& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  fail(Errc::ParseError, "expected a number, got '" + s + "'");
}

ojson cell_json(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return num(*d);
  return std::get<std::string>(c);
}

ojson table_json(const DataTable& t) {
  ojson rows = ojson::array();
  for (const auto& r : t.rows) {
    ojson row = ojson::array();
    for (const auto& c : r) row.push_back(cell_json(c));
    rows.push_back(std::move(row));
  }
  return ojson{{"name", t.name}, {"provenance", t.provenance}, {"columns", t.columns}, {"rows", std::move(rows)}};
}

DataTable table_from(const ojson& j) {
  DataTable t;
  t.name = j.at("name").get<std::string>();
  t.provenance = j.at("provenance").get<std::string>();
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<Cell> row;
    for (const auto& c : r) {
      if (c.is_number())
        row.emplace_back(c.get<double>());
      else {
        const auto s = c.get<std::string>();
        if (s == "inf" || s == "-inf" || s == "nan")
          row.emplace_back(from_num(c));
        else
          row.emplace_back(s);
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

BoundStatus status_from(const std::string& s) {
  for (BoundStatus b : {BoundStatus::ok, BoundStatus::no_feasible_t, BoundStatus::hypothesis_unverified,
                        BoundStatus::disconnected_gc})
    if (s == status_name(b)) return b;
  fail(Errc::ParseError, "unknown bound status '" + s + "'");
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_num(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  fail(Errc::ConfigInvalid, "'" + key + "' expects a number, got '" + v + "'");
}

std::uint64_t to_seed(const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used);
    if (used == v.size()) return s;
  } catch (const std::exception&) {
  }
  fail(Errc::ConfigInvalid, "seed must be a nonnegative integer, got '" + v + "'");
}

Task parse_task(const std::string& s) {
  for (Task t : {Task::analyze, Task::bounds, Task::audit, Task::reproduce})
    if (s == task_name(t)) return t;
  fail(Errc::ConfigInvalid, "unknown task '" + s + "'");
}

using Sections = std::map<std::string, std::map<std::string, std::string>>;

ExperimentConfig config_from_sections(const Sections& sections) {
  static const std::map<std::string, std::vector<std::string>> allowed = {
      {"chain", {"spec", "kernel", "partition"}},
      {"tasks", {"run"}},
      {"constants", {"c_alpha", "c_alpha_prime", "calibrate_on"}},
      {"run", {"seeds", "alpha", "suites", "output_dir", "format"}}};
  ExperimentConfig c;
  bool c1 = false, c2 = false;
  for (const auto& [section, keys] : sections) {
    const auto it = allowed.find(section);
    require(it != allowed.end(), Errc::ConfigInvalid, "unknown section [" + section + "]");
    for (const auto& [key, value] : keys) {
      require(std::find(it->second.begin(), it->second.end(), key) != it->second.end(), Errc::ConfigInvalid,
              "unknown key '" + key + "' in [" + section + "]");
      if (section == "chain" && key == "spec") {
        try {
          c.chain = parse_chain_spec(value);
        } catch (const Error& e) {
          fail(Errc::ConfigInvalid, e.what());
        }
      } else if (section == "chain" && key == "kernel") {
        c.kernel_path = value;
      } else if (section == "chain" && key == "partition") {
        c.partition = value;
      } else if (section == "tasks") {
        for (const auto& t : split_list(value)) c.tasks.push_back(parse_task(t));
      } else if (key == "c_alpha") {
        c.constants.c_alpha = to_double(key, value);
        c1 = true;
      } else if (key == "c_alpha_prime") {
        c.constants.c_alpha_prime = to_double(key, value);
        c2 = true;
      } else if (key == "calibrate_on") {
        c.calibrate_on = value;
      } else if (key == "seeds") {
        for (const auto& s : split_list(value)) c.seeds.push_back(to_seed(s));
      } else if (key == "alpha") {
        c.alpha = to_double(key, value);
      } else if (key == "suites") {
        c.suites = split_list(value);
      } else if (key == "output_dir") {
        c.output_dir = value;
      } else if (key == "format") {
        try {
          c.format = parse_format(value);
        } catch (const Error& e) {
          fail(Errc::ConfigInvalid, e.what());
        }
      }
    }
  }
  if (c1 || c2) {
    c.constants.calibrated = true;
    c.constants.calibration = "user";
  }
  return c;
}

std::string block_label(const std::string& prefix, Index i) { return prefix + "[" + std::to_string(i) + "]"; }

}  // namespace

std::string report_to_json(const Report& r) {
  ojson j;
  j["schema"] = r.schema;
  j["command"] = r.command;
  j["meta"] = ojson::object();
  for (const auto& [k, v] : r.meta) j["meta"][k] = v;
  j["quantities"] = ojson::array();
  for (const auto& q : r.quantities)
    j["quantities"].push_back({{"name", q.name}, {"value", num(q.value)}, {"provenance", q.provenance}});
  j["bounds"] = ojson::array();
  for (const auto& b : r.bounds) {
    ojson ing = ojson::object();
    for (const auto& [k, v] : b.ingredients) ing[k] = num(v);
    ojson notes = ojson::object();
    for (const auto& [k, v] : b.notes) notes[k] = v;
    j["bounds"].push_back({{"name", b.name},
                           {"value", num(b.value)},
                           {"status", status_name(b.status)},
                           {"universal_constant_flag", b.universal_constant_flag},
                           {"provenance", b.provenance},
                           {"ingredients", std::move(ing)},
                           {"notes", std::move(notes)}});
  }
  j["tables"] = ojson::array();
  for (const auto& t : r.tables) j["tables"].push_back(table_json(t));
  j["suites"] = ojson::array();
  for (const auto& s : r.suites)
    j["suites"].push_back({{"name", s.name},
                           {"passed", s.passed},
                           {"measured", num(s.measured)},
                           {"threshold", s.threshold},
                           {"detail", s.detail},
                           {"seed", s.seed},
                           {"data", table_json(s.data)}});
  return j.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const std::exception& e) {
    fail(Errc::ParseError, std::string("report is not valid JSON: ") + e.what());
  }
  try {
    Report r;
    r.schema = j.at("schema").get<std::string>();
    require(r.schema == kReportSchema, Errc::ParseError, "unsupported report schema '" + r.schema + "'");
    r.command = j.at("command").get<std::string>();
    for (const auto& [k, v] : j.at("meta").items()) r.meta[k] = v.get<std::string>();
    for (const auto& q : j.at("quantities"))
      r.quantities.push_back({q.at("name").get<std::string>(), from_num(q.at("value")),
                              q.at("provenance").get<std::string>()});
    for (const auto& b : j.at("bounds")) {
      BoundResult out;
      out.name = b.at("name").get<std::string>();
      out.value = from_num(b.at("value"));
      out.status = status_from(b.at("status").get<std::string>());
      out.universal_constant_flag = b.at("universal_constant_flag").get<bool>();
      out.provenance = b.at("provenance").get<std::string>();
      for (const auto& [k, v] : b.at("ingredients").items()) out.ingredients[k] = from_num(v);
      for (const auto& [k, v] : b.at("notes").items()) out.notes[k] = v.get<std::string>();
      r.bounds.push_back(std::move(out));
    }
    for (const auto& t : j.at("tables")) r.tables.push_back(table_from(t));
    for (const auto& s : j.at("suites")) {
      SuiteOutcome o;
      o.name = s.at("name").get<std::string>();
      o.passed = s.at("passed").get<bool>();
      o.measured = from_num(s.at("measured"));
      o.threshold = s.at("threshold").get<std::string>();
      o.detail = s.at("detail").get<std::string>();
      o.seed = s.at("seed").get<std::uint64_t>();
      o.data = table_from(s.at("data"));
      r.suites.push_back(std::move(o));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("report does not match the schema: ") + e.what());
  }
}

std::string report_hash(const Report& report) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : report_to_json(report)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ReportFormat parse_format(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  fail(Errc::InvalidParameter, "format must be json or csv, got '" + name + "'");
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), Errc::IoError, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    require(static_cast<bool>(out), Errc::IoError, "write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(Errc::IoError, "cannot move report into " + path.string());
  }
}

std::vector<std::filesystem::path> emit_report(const Report& report, const std::filesystem::path& out_dir,
                                               ReportFormat format) {
  require(!report.quantities.empty() || !report.bounds.empty() || !report.tables.empty() || !report.suites.empty(),
          Errc::InvalidParameter, "report is empty");
  std::vector<std::filesystem::path> files;
  if (format == ReportFormat::json) {
    files.push_back(out_dir / "report.json");
    atomic_write(files.back(), report_to_json(report));
    return files;
  }
  // Render every file first so a failure leaves nothing half-written.
  std::vector<std::pair<std::filesystem::path, std::string>> pending;
  {
    std::string s = "name,value,provenance\n";
    for (const auto& q : report.quantities)
      s += csv_escape(q.name) + "," + csv_num(q.value) + "," + csv_escape(q.provenance) + "\n";
    pending.emplace_back(out_dir / "quantities.csv", std::move(s));
  }
  {
    std::string s = "name,value,status,universal_constant_flag,provenance,applicable\n";
    for (const auto& b : report.bounds) {
      const auto a = b.notes.find("applicable");
      s += csv_escape(b.name) + "," + csv_num(b.value) + "," + status_name(b.status) + "," +
           (b.universal_constant_flag ? "1" : "0") + "," + csv_escape(b.provenance) + "," +
           csv_escape(a == b.notes.end() ? "" : a->second) + "\n";
    }
    pending.emplace_back(out_dir / "bounds.csv", std::move(s));
  }
  auto render = [](const DataTable& t) {
    std::string s;
    for (std::size_t k = 0; k < t.columns.size(); ++k) s += (k ? "," : "") + csv_escape(t.columns[k]);
    s += ",provenance\n";
    for (const auto& row : t.rows) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (k) s += ",";
        if (const double* d = std::get_if<double>(&row[k]))
          s += csv_num(*d);
        else
          s += csv_escape(std::get<std::string>(row[k]));
      }
      s += "," + csv_escape(t.provenance) + "\n";
    }
    return s;
  };
  for (const auto& t : report.tables) pending.emplace_back(out_dir / (t.name + ".csv"), render(t));
  if (!report.suites.empty()) {
    std::string s = "name,passed,measured,threshold,seed,detail\n";
    for (const auto& o : report.suites) {
      s += csv_escape(o.name) + "," + (o.passed ? "1" : "0") + "," + csv_num(o.measured) + "," +
           csv_escape(o.threshold) + "," + std::to_string(o.seed) + "," + csv_escape(o.detail) + "\n";
      pending.emplace_back(out_dir / (o.data.name + ".csv"), render(o.data));
    }
    pending.emplace_back(out_dir / "suites.csv", std::move(s));
  }
  for (auto& [path, content] : pending) {
    atomic_write(path, content);
    files.push_back(path);
  }
  return files;
}

const char* task_name(Task task) {
  switch (task) {
    case Task::analyze: return "analyze";
    case Task::bounds: return "bounds";
    case Task::audit: return "audit";
    case Task::reproduce: return "reproduce";
  }
  return "?";
}

ExperimentConfig parse_config(const std::string& text) {
  Sections sections;
  std::string current;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, Errc::ConfigInvalid,
              "line " + std::to_string(lineno) + ": malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, Errc::ConfigInvalid, "line " + std::to_string(lineno) + ": expected key = value");
    require(!current.empty(), Errc::ConfigInvalid, "line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    require(!sections[current].count(key), Errc::ConfigInvalid,
            "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    sections[current][key] = trim(line.substr(eq + 1));
  }
  return config_from_sections(sections);
}

ExperimentConfig parse_config_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const std::exception& e) {
    fail(Errc::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), Errc::ConfigInvalid, "config must be a JSON object of sections");
  Sections sections;
  for (const auto& [section, body] : j.items()) {
    require(body.is_object(), Errc::ConfigInvalid, "section '" + section + "' must be an object");
    for (const auto& [key, v] : body.items()) {
      std::string value;
      if (v.is_string())
        value = v.get<std::string>();
      else if (v.is_array()) {
        for (const auto& e : v) {
          if (!value.empty()) value += ",";
          value += e.is_string() ? e.get<std::string>() : e.dump();
        }
      } else {
        value = v.dump();
      }
      sections[section][key] = value;
    }
  }
  return config_from_sections(sections);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::ConfigInvalid, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return path.extension() == ".json" ? parse_config_json(ss.str()) : parse_config(ss.str());
}

void validate_config(const ExperimentConfig& c) {
  require(!c.tasks.empty(), Errc::ConfigInvalid, "tasks must be nonempty");
  const bool reproduce_only = std::all_of(c.tasks.begin(), c.tasks.end(), [](Task t) { return t == Task::reproduce; });
  require(reproduce_only || c.chain.has_value() != c.kernel_path.has_value(), Errc::ConfigInvalid,
          "give exactly one of chain spec or kernel file");
  if (c.kernel_path)
    require(std::filesystem::exists(*c.kernel_path), Errc::ConfigInvalid,
            "kernel file " + c.kernel_path->string() + " does not exist");
  if (c.partition != "canonical") {
    require(c.kernel_path.has_value() || c.chain.has_value(), Errc::ConfigInvalid, "partition without a chain");
    require(std::filesystem::exists(c.partition), Errc::ConfigInvalid, "partition file " + c.partition + " does not exist");
  }
  require(c.constants.c_alpha > 0.0 && c.constants.c_alpha_prime > 0.0, Errc::ConfigInvalid,
          "constants must be positive");
  require(c.alpha > 0.0 && c.alpha < 0.5, Errc::ConfigInvalid, "alpha must lie in (0, 1/2)");
  const bool needs_seed = std::any_of(c.tasks.begin(), c.tasks.end(), [](Task t) { return t == Task::reproduce; });
  require(!needs_seed || !c.seeds.empty(), Errc::ConfigInvalid, "reproduce suites need explicit seeds");
  for (const auto& s : c.suites) {
    const auto names = suite_names();
    require(std::find(names.begin(), names.end(), s) != names.end(), Errc::ConfigInvalid, "unknown suite '" + s + "'");
  }
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  require(std::filesystem::is_directory(c.output_dir), Errc::ConfigInvalid,
          "output_dir " + c.output_dir.string() + " is not writable");
}

PeresSousiConstants parse_constants(const std::string& text) {
  PeresSousiConstants c;
  bool seen = false;
  for (const auto& item : split_list(text)) {
    const auto eq = item.find('=');
    require(eq != std::string::npos, Errc::ConfigInvalid, "constants expect key=value pairs");
    const std::string key = trim(item.substr(0, eq));
    const double v = to_double(key, trim(item.substr(eq + 1)));
    require(v > 0.0, Errc::ConfigInvalid, "constants must be positive");
    if (key == "c_alpha")
      c.c_alpha = v;
    else if (key == "c_alpha_prime")
      c.c_alpha_prime = v;
    else
      fail(Errc::ConfigInvalid, "unknown constant '" + key + "'");
    seen = true;
  }
  c.calibrated = seen;
  if (seen) c.calibration = "user";
  return c;
}

LoadedChain load_chain(const ExperimentConfig& config) {
  LoadedChain out;
  if (config.chain) {
    out.chain = build_chain(*config.chain);
    out.source = out.chain.family;
  } else {
    require(config.kernel_path.has_value(), Errc::ConfigInvalid, "no chain given");
    ChainInstance c;
    c.family = "file";
    c.kernel = read_kernel_file(*config.kernel_path);
    c.partition = Partition::single_block(c.kernel->size());
    out.chain = std::move(c);
    out.source = config.kernel_path->string();
  }
  ChainInstance& c = out.chain;
  require(c.kernel.has_value(), Errc::ConfigInvalid, "analysis tasks need an explicit kernel");
  if (config.partition != "canonical") c.partition = read_partition_file(config.partition, c.kernel->size());
  if (!c.pi) c.pi = stationary_distribution(*c.kernel);
  return out;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::AssertionFailed: return 2;
    case Errc::SuiteFailed: return 3;
    default: return 1;
  }
}

void add_analysis(Report& report, const ChainInstance& chain) {
  const StochasticKernel& K = *chain.kernel;
  const ChainAnalysis a = analyze_chain(K, *chain.pi, chain.partition);
  const Index n = chain.partition.n_blocks();
  report.quantities.push_back({"n_states", static_cast<double>(K.size()), "exact"});
  report.quantities.push_back({"n_blocks", static_cast<double>(n), "exact"});
  report.quantities.push_back({"tau_mix", static_cast<double>(a.tau_mix), "exact"});
  report.quantities.push_back({"relaxation_time", a.relaxation_time, "exact"});
  report.quantities.push_back({"phi_max", static_cast<double>(a.phi_max), "exact"});
  report.quantities.push_back({"reversibility_residual", a.reversibility_residual, "exact"});
  report.quantities.push_back({"projected_reversibility_residual", a.projected_residual, "exact"});
  for (Index i = 0; i < n; ++i) {
    report.quantities.push_back({block_label("phi", i), a.phi[static_cast<std::size_t>(i)], "exact"});
    report.quantities.push_back({block_label("mass", i), a.masses[static_cast<std::size_t>(i)], "exact"});
  }
  DataTable kbar{"projected_kernel", {"i", "j", "Kbar"}, {}, "exact"};
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (a.projected(i, j) != 0.0)
        kbar.rows.push_back({static_cast<double>(i), static_cast<double>(j), a.projected(i, j)});
  report.tables.push_back(std::move(kbar));
}

void add_bounds(Report& report, const ChainInstance& chain, const PeresSousiConstants& constants,
                double regular_envelope, double alpha) {
  const ChainAnalysis a = analyze_chain(*chain.kernel, *chain.pi, chain.partition);
  EvaluationOptions o;
  o.alpha = alpha;
  o.constants = constants;
  o.regular_envelope = regular_envelope;
  o.drift = default_drift(chain);
  for (auto& b : evaluate_bounds(*chain.kernel, *chain.pi, chain.partition, a, o)) {
    if (b.provenance.empty()) b.provenance = "formula(not evaluated)";
    report.bounds.push_back(std::move(b));
  }
  if (!std::any_of(report.quantities.begin(), report.quantities.end(),
                   [](const Quantity& q) { return q.name == "tau_mix"; }))
    report.quantities.push_back({"tau_mix", static_cast<double>(a.tau_mix), "exact"});
}

void add_audit(Report& report, const ChainInstance& chain, std::uint64_t seed) {
  const StochasticKernel& K = *chain.kernel;
  const HittingMixingAudit audit =
      peres_sousi_audit(K, *chain.pi, 0.25, K.size() <= kMaxExactAuditStates ? SubsetMode::exact : SubsetMode::sampled,
                        kAnalysisHorizon, 256, seed);
  const std::string prov = audit.lower_bound_only ? "mc(sets=256,seed=" + std::to_string(seed) + ")" : "exact";
  report.quantities.push_back({"audit_tau_mix", static_cast<double>(audit.tau_mix), "exact"});
  report.quantities.push_back({"audit_max_hit", audit.max_hit, prov});
  report.quantities.push_back({"audit_ratio", audit.ratio, prov});

  const Index n = chain.partition.n_blocks();
  if (n >= 2 && K.size() * K.size() <= static_cast<Index>(kMaxExactPairs)) {
    const ContractionEstimate est = estimate_contraction(K, chain.partition, BlockMetric::discrete(n), n, seed);
    const std::string p = est.coverage == Coverage::exact_all_pairs ? "exact" : "mc(seed=" + std::to_string(seed) + ")";
    report.quantities.push_back({"contraction_alpha", est.alpha, p});
    report.quantities.push_back({"contraction_beta", est.beta, p});
    report.quantities.push_back({"contraction_certified", est.certified ? 1.0 : 0.0, p});
  }
  DataTable esc{"escape_regularity", {"epsilon", "delta", "threshold"}, {}, "exact"};
  const ChainAnalysis a = analyze_chain(K, *chain.pi, chain.partition);
  for (int k = 1; k <= 8; ++k) {
    const EscapeRegularity r = escape_regularity(K, chain.partition, std::ldexp(1.0, -k), a.phi_max);
    esc.rows.push_back({r.epsilon, r.delta, static_cast<double>(r.threshold)});
  }
  report.tables.push_back(std::move(esc));
}

void add_suite(Report& report, const SuiteOutcome& outcome) { report.suites.push_back(outcome); }

ExperimentOutcome run_experiment(const ExperimentConfig& config, const std::string& command) {
  validate_config(config);
  ExperimentOutcome out;
  Report& r = out.report;
  r.command = command;
  std::string tasks;
  for (Task t : config.tasks) tasks += (tasks.empty() ? "" : ",") + std::string(task_name(t));
  r.meta["tasks"] = tasks;
  const std::uint64_t seed = config.seeds.empty() ? 1 : config.seeds.front();
  r.meta["seed"] = std::to_string(seed);

  const bool needs_chain =
      std::any_of(config.tasks.begin(), config.tasks.end(), [](Task t) { return t != Task::reproduce; });
  std::optional<LoadedChain> loaded;
  if (needs_chain) {
    loaded = load_chain(config);
    r.meta["chain"] = loaded->source;
    r.meta["kernel_hash"] = kernel_hash(*loaded->chain.kernel);
  }

  PeresSousiConstants constants = config.constants;
  double envelope = 1.0;
  if (config.calibrate_on) {
    const ChainInstance ref = build_chain(parse_chain_spec(*config.calibrate_on));
    const Calibration cal = calibrate_on(ref, *config.calibrate_on, seed);
    constants = cal.constants;
    envelope = cal.regular_envelope;
    r.quantities.push_back({"calibration_c_alpha", constants.c_alpha, "exact"});
    r.quantities.push_back({"calibration_regular_envelope", envelope, "exact"});
  }

  for (Task t : config.tasks) {
    switch (t) {
      case Task::analyze: add_analysis(r, loaded->chain); break;
      case Task::bounds: add_bounds(r, loaded->chain, constants, envelope, config.alpha); break;
      case Task::audit: add_audit(r, loaded->chain, seed); break;
      case Task::reproduce: {
        const auto names = config.suites.empty() ? suite_names() : config.suites;
        for (std::uint64_t s : config.seeds)
          for (const auto& name : names) {
            SuiteOutcome o = run_suite(name, s);
            if (!o.passed) out.exit_code = exit_code_for(Errc::SuiteFailed);
            add_suite(r, o);
          }
        break;
      }
    }
  }
  out.files = emit_report(r, config.output_dir, config.format);
  return out;
}

}  // namespace mixdecomp
