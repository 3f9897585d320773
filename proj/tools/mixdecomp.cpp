#include "mixdecomp/error.hpp"
#include "mixdecomp/kernel_io.hpp"
#include "mixdecomp/report.hpp"
#include "mixdecomp/simulation.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace mixdecomp;

namespace {

struct Common {
  std::string chain;
  std::string kernel;
  std::string partition = "canonical";
  std::string out = ".";
  std::string format = "json";
  std::vector<std::uint64_t> seeds;
};

void add_source(CLI::App* cmd, Common& c) {
  cmd->add_option("--chain", c.chain, "family:key=value,... (pince_nez, expander_pair, toy_kcip, kcip, torus_metropolis)");
  cmd->add_option("--kernel", c.kernel, "kernel file (dense or sparse text)");
  cmd->add_option("--partition", c.partition, "partition file, or 'canonical'");
}

void add_output(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

ExperimentConfig base_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.chain.empty()) cfg.chain = parse_chain_spec(c.chain);
  if (!c.kernel.empty()) cfg.kernel_path = c.kernel;
  cfg.partition = c.partition;
  cfg.output_dir = c.out;
  cfg.format = parse_format(c.format);
  cfg.seeds = c.seeds;
  return cfg;
}

int finish(const ExperimentOutcome& outcome) {
  for (const auto& f : outcome.files) std::cout << f.string() << "\n";
  for (const auto& s : outcome.report.suites)
    std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.detail << "\n";
  return outcome.exit_code;
}

int simulate_command(const Common& c, long steps, std::uint64_t start, const std::string& trajectory) {
  ExperimentConfig cfg = base_config(c);
  cfg.tasks = {Task::analyze};   // validation only; the run below replaces it
  validate_config(cfg);
  const std::uint64_t seed = c.seeds.empty() ? 1 : c.seeds.front();
  ChainInstance chain;
  std::string source;
  if (!c.chain.empty()) {
    chain = build_chain(*cfg.chain);
    source = chain.family;
    if (chain.kernel && c.partition != "canonical")
      chain.partition = read_partition_file(c.partition, chain.kernel->size());
  } else {
    const LoadedChain l = load_chain(cfg);
    chain = l.chain;
    source = l.source;
  }
  require(chain.sampler != nullptr, Errc::ConfigInvalid, "chain has no sampler");
  const BlockMap map = chain.kernel ? block_map(chain.partition) : chain.blocks.value_or(BlockMap{});
  require(static_cast<bool>(map.of), Errc::ConfigInvalid, "chain has no block classifier");
  const SimulationResult sim = simulate(*chain.sampler, map, start, steps, seed);

  Report r;
  r.command = "simulate";
  r.meta["chain"] = source;
  r.meta["seed"] = std::to_string(seed);
  r.meta["start"] = std::to_string(start);
  const std::string prov = "mc(reps=1,seed=" + std::to_string(seed) + ")";
  r.quantities.push_back({"T", static_cast<double>(steps), "exact"});
  DataTable occ{"occupation", {"block", "kappa"}, {}, prov};
  for (Index i = 0; i < sim.record.n_blocks; ++i)
    occ.rows.push_back({static_cast<double>(i), static_cast<double>(sim.record.kappa[static_cast<std::size_t>(i)])});
  DataTable trans{"transitions", {"i", "j", "N"}, {}, prov};
  for (Index i = 0; i < sim.record.n_blocks; ++i)
    for (Index j = 0; j < sim.record.n_blocks; ++j)
      if (const long v = sim.record.transitions(i, j); v != 0)
        trans.rows.push_back({static_cast<double>(i), static_cast<double>(j), static_cast<double>(v)});
  r.tables.push_back(std::move(occ));
  r.tables.push_back(std::move(trans));
  ExperimentOutcome out;
  out.report = std::move(r);
  out.files = emit_report(out.report, cfg.output_dir, cfg.format);
  if (!trajectory.empty()) {
    const auto n = chain.kernel ? static_cast<std::uint32_t>(chain.kernel->size()) : 0U;
    write_trajectory(trajectory, sim.trajectory, n);
    out.files.emplace_back(trajectory);
  }
  return finish(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decomposition-based mixing analysis of finite Markov chains"};
  app.require_subcommand(0, 1);
  std::string config_path;
  app.add_option("--config", config_path, "run an experiment config (key=value sections or .json)");

  Common common;
  std::string constants;
  std::string calibrate;
  double alpha = 0.45;
  std::vector<std::string> suites;
  long steps = 1000;
  std::uint64_t start = 0;
  std::string trajectory;

  auto* analyze = app.add_subcommand("analyze", "exact mixing, trace and projection quantities");
  add_source(analyze, common);
  add_output(analyze, common);

  auto* bounds = app.add_subcommand("bounds", "evaluate every applicable mixing bound");
  add_source(bounds, common);
  add_output(bounds, common);
  bounds->add_option("--constants", constants, "c_alpha=..,c_alpha_prime=..");
  bounds->add_option("--calibrate-on", calibrate, "chain spec to calibrate constants on, e.g. pince_nez:m=8");
  bounds->add_option("--alpha", alpha, "mass level alpha in (0, 1/2)");
  bounds->add_option("--seed", common.seeds, "seed");

  auto* audit = app.add_subcommand("audit", "hitting/mixing audit, contraction and escape regularity");
  add_source(audit, common);
  add_output(audit, common);
  audit->add_option("--seed", common.seeds, "seed");

  auto* reproduce = app.add_subcommand("reproduce", "run reproduction suites");
  add_output(reproduce, common);
  reproduce->add_option("--suite", suites, "suite name (repeatable; default all)");
  reproduce->add_option("--seed", common.seeds, "seed (repeatable)")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "simulate one trajectory and record occupations");
  add_source(simulate_cmd, common);
  add_output(simulate_cmd, common);
  simulate_cmd->add_option("--steps", steps, "number of steps T")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--start", start, "start state");
  simulate_cmd->add_option("--seed", common.seeds, "seed");
  simulate_cmd->add_option("--trajectory", trajectory, "binary trajectory dump path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!config_path.empty()) {
      require(app.get_subcommands().empty(), Errc::ConfigInvalid, "--config cannot be combined with a subcommand");
      return finish(run_experiment(load_config(config_path), "config"));
    }
    if (app.get_subcommands().empty()) {
      std::cout << app.help();
      return 1;
    }
    if (*analyze) {
      ExperimentConfig cfg = base_config(common);
      cfg.tasks = {Task::analyze};
      return finish(run_experiment(cfg, "analyze"));
    }
    if (*bounds) {
      ExperimentConfig cfg = base_config(common);
      cfg.tasks = {Task::bounds};
      if (!constants.empty()) cfg.constants = parse_constants(constants);
      if (!calibrate.empty()) cfg.calibrate_on = calibrate;
      cfg.alpha = alpha;
      return finish(run_experiment(cfg, "bounds"));
    }
    if (*audit) {
      ExperimentConfig cfg = base_config(common);
      cfg.tasks = {Task::audit};
      return finish(run_experiment(cfg, "audit"));
    }
    if (*reproduce) {
      ExperimentConfig cfg = base_config(common);
      cfg.tasks = {Task::reproduce};
      cfg.suites = suites;
      return finish(run_experiment(cfg, "reproduce"));
    }
    return simulate_command(common, steps, start, trajectory);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: AssertionFailed: " << e.what() << "\n";
    return 2;
  }
}
