#include "mixdecomp/chains.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/kernel_io.hpp"
#include "mixdecomp/report.hpp"
#include "mixdecomp/suites.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mixdecomp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mixdecomp_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<long>(std::count(s.begin(), s.end(), '\n'));
}

Errc config_error(const std::string& text) {
  try {
    validate_config(parse_config(text));
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::AssertionFailed;
}

Report sample_report() {
  Report r;
  r.command = "test";
  r.meta["seed"] = "4";
  r.quantities.push_back({"tau_mix", 54.0, "exact"});
  r.quantities.push_back({"unbounded", INFINITY, "formula(uncalibrated)"});
  BoundResult b;
  b.name = "basic";
  b.value = 606.5;
  b.ingredients = {{"T", 455.0}, {"t", 12.0}};
  b.notes = {{"applicable", "yes"}, {"target", "tau_mix"}};
  b.provenance = "formula(uncalibrated)+exact";
  r.bounds.push_back(b);
  BoundResult nf;
  nf.name = "drift";
  nf.status = BoundStatus::hypothesis_unverified;
  r.bounds.push_back(nf);
  r.tables.push_back(DataTable{"t1", {"m", "quantity", "value"}, {{8.0, std::string("tau"), 54.0}}, "exact"});
  return r;
}

}  // namespace

TEST(Json, RoundTripPreservesEverything) {
  const Report r = sample_report();
  const std::string text = report_to_json(r);
  const Report back = report_from_json(text);
  EXPECT_EQ(back.schema, kReportSchema);
  EXPECT_EQ(back.quantities.size(), 2u);
  EXPECT_TRUE(std::isinf(back.quantities[1].value));
  EXPECT_EQ(back.bounds[0].ingredients.at("T"), 455.0);
  EXPECT_EQ(back.bounds[1].status, BoundStatus::hypothesis_unverified);
  EXPECT_TRUE(std::isinf(back.bounds[1].value));
  EXPECT_EQ(std::get<std::string>(back.tables[0].rows[0][1]), "tau");
  EXPECT_EQ(report_to_json(back), text);
  EXPECT_EQ(report_hash(back), report_hash(r));
}

TEST(Json, RejectsWrongSchema) {
  EXPECT_THROW(report_from_json("{\"schema\": \"other/9\"}"), Error);
  EXPECT_THROW(report_from_json("not json"), Error);
}

TEST(Emit, CsvHasHeaderAndOneRowPerCell) {
  const fs::path dir = scratch("csv");
  Report r = sample_report();
  SuiteOutcome s;
  s.name = "demo";
  s.passed = true;
  s.data = DataTable{"demo", {"m", "quantity", "value"}, {}, "exact"};
  for (double m : {8.0, 16.0, 32.0})
    for (const char* q : {"tau_mix", "relaxation_time"}) s.data.rows.push_back({m, std::string(q), 1.0});
  r.suites.push_back(s);
  const auto files = emit_report(r, dir, ReportFormat::csv);
  EXPECT_EQ(lines(dir / "demo.csv"), 1 + 6);
  EXPECT_EQ(lines(dir / "quantities.csv"), 1 + 2);
  EXPECT_EQ(lines(dir / "bounds.csv"), 1 + 2);
  EXPECT_EQ(lines(dir / "suites.csv"), 1 + 1);
  EXPECT_EQ(slurp(dir / "t1.csv").substr(0, 27), "m,quantity,value,provenance");
  for (const auto& f : files) EXPECT_FALSE(fs::exists(fs::path(f.string() + ".tmp")));
  fs::remove_all(dir);
}

TEST(Emit, EmptyReportIsRejected) {
  EXPECT_THROW(emit_report(Report{}, scratch("empty"), ReportFormat::json), Error);
}

TEST(Config, ParsesSectionsAndMarksUserConstants) {
  const fs::path dir = scratch("cfg");
  const auto c = parse_config(
      "# comment\n[chain]\nspec = pince_nez:m=8\n[tasks]\nrun = analyze, bounds\n"
      "[constants]\nc_alpha = 0.5  # trailing\n[run]\nseeds = 1,2\nalpha = 0.3\noutput_dir = " +
      dir.string() + "\nformat = csv\n");
  EXPECT_EQ(c.chain->family, "pince_nez");
  ASSERT_EQ(c.tasks.size(), 2u);
  EXPECT_EQ(c.tasks[1], Task::bounds);
  EXPECT_TRUE(c.constants.calibrated);
  EXPECT_EQ(c.constants.c_alpha, 0.5);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(c.format, ReportFormat::csv);
  EXPECT_NO_THROW(validate_config(c));
  const auto j = parse_config_json("{\"chain\": {\"spec\": \"pince_nez:m=8\"}, \"tasks\": {\"run\": [\"analyze\"]},"
                                   " \"run\": {\"alpha\": 0.3, \"output_dir\": \"" + dir.string() + "\"}}");
  EXPECT_EQ(j.alpha, 0.3);
  EXPECT_EQ(j.tasks, std::vector<Task>{Task::analyze});
  fs::remove_all(dir);
}

TEST(Config, InvalidConfigurations) {
  const std::string out = "[run]\noutput_dir = " + scratch("bad").string() + "\n";
  EXPECT_EQ(config_error("[chain]\nspec = pince_nez:m=8\n" + out), Errc::ConfigInvalid);   // empty tasks
  EXPECT_EQ(config_error("[tasks]\nrun = analyze\n" + out), Errc::ConfigInvalid);          // no chain
  EXPECT_EQ(config_error("[chain]\nspec = pince_nez:m=8\nkernel = /nonexistent\n[tasks]\nrun = analyze\n" + out),
            Errc::ConfigInvalid);
  EXPECT_EQ(config_error("[chain]\nkernel = /nonexistent/k.txt\n[tasks]\nrun = analyze\n" + out), Errc::ConfigInvalid);
  EXPECT_EQ(config_error("[chain]\nspec = pince_nez:m=8\n[tasks]\nrun = sing\n" + out), Errc::ConfigInvalid);
  EXPECT_EQ(config_error("[tasks]\nrun = reproduce\n" + out), Errc::ConfigInvalid);   // no seeds
  EXPECT_EQ(config_error("[tasks]\nrun = reproduce\n[run]\nseeds = 1\nsuites = nope\n"), Errc::ConfigInvalid);
  EXPECT_EQ(config_error("[chain]\nspec = pince_nez:m=8\ncolour = red\n[tasks]\nrun = analyze\n"), Errc::ConfigInvalid);
  EXPECT_EQ(config_error("[tasks]\nrun = analyze\nrun = bounds\n"), Errc::ConfigInvalid);
  EXPECT_EQ(config_error("[chain]\nspec = pince_nez:m=8\n[tasks]\nrun = analyze\n[run]\nalpha = 0.7\n"),
            Errc::ConfigInvalid);
  EXPECT_EQ(config_error("key = value\n"), Errc::ConfigInvalid);
}

TEST(Constants, ParseAndExitCodes) {
  const auto c = parse_constants("c_alpha=0.25,c_alpha_prime=2");
  EXPECT_EQ(c.c_alpha, 0.25);
  EXPECT_EQ(c.c_alpha_prime, 2.0);
  EXPECT_TRUE(c.calibrated);
  EXPECT_THROW(parse_constants("c_beta=1"), Error);
  EXPECT_THROW(parse_constants("c_alpha=-1"), Error);
  EXPECT_EQ(exit_code_for(Errc::ConfigInvalid), 1);
  EXPECT_EQ(exit_code_for(Errc::AssertionFailed), 2);
  EXPECT_EQ(exit_code_for(Errc::SuiteFailed), 3);
}

TEST(Experiment, AnalyzePinceNez) {
  ExperimentConfig c;
  c.chain = parse_chain_spec("pince_nez:m=8");
  c.tasks = {Task::analyze};
  c.output_dir = scratch("analyze");
  const auto out = run_experiment(c, "analyze");
  EXPECT_EQ(out.exit_code, 0);
  const Report back = report_from_json(slurp(c.output_dir / "report.json"));
  auto find = [&](const std::string& name) {
    for (const auto& q : back.quantities)
      if (q.name == name) return q;
    return Quantity{};
  };
  EXPECT_EQ(find("tau_mix").value, static_cast<double>(oracle::mixing_time(pince_nez(8).kernel->matrix(),
                                                                           Vector::Constant(16, 1.0 / 16), 1000)));
  EXPECT_EQ(find("tau_mix").provenance, "exact");
  EXPECT_GT(find("phi[0]").value, 0.0);
  EXPECT_GT(find("phi[1]").value, 0.0);
  bool has_projected = false;
  for (const auto& t : back.tables) has_projected |= t.name == "projected_kernel";
  EXPECT_TRUE(has_projected);
  for (const auto& q : back.quantities) EXPECT_FALSE(q.provenance.empty()) << q.name;
  fs::remove_all(c.output_dir);
}

TEST(Experiment, UncalibratedBoundsAreFlagged) {
  ExperimentConfig c;
  c.chain = parse_chain_spec("pince_nez:m=8");
  c.tasks = {Task::bounds};
  c.output_dir = scratch("bounds");
  const auto out = run_experiment(c, "bounds");
  ASSERT_FALSE(out.report.bounds.empty());
  for (const auto& b : out.report.bounds) {
    EXPECT_FALSE(b.provenance.empty()) << b.name;
    if (b.provenance.find("formula(uncalibrated)") != std::string::npos) EXPECT_TRUE(b.universal_constant_flag) << b.name;
  }
  fs::remove_all(c.output_dir);
}

TEST(Experiment, KernelFileWithPartitionAndStableHash) {
  const fs::path dir = scratch("kernel");
  fs::create_directories(dir);
  std::mt19937_64 gen(5);
  const auto rc = oracle::random_reversible(6, gen);
  {
    std::ofstream k(dir / "k.txt");
    write_kernel(k, StochasticKernel(rc.K));
    std::ofstream p(dir / "p.txt");
    p << "0 0\n1 0\n2 0\n3 1\n4 1\n5 1\n";
  }
  ExperimentConfig c;
  c.kernel_path = dir / "k.txt";
  c.partition = (dir / "p.txt").string();
  c.tasks = {Task::analyze, Task::audit};
  c.seeds = {3};
  c.output_dir = dir / "out";
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  EXPECT_EQ(report_hash(a.report), report_hash(b.report));
  fs::remove_all(dir);
}

TEST(Suites, KcipReversibilityPassesAndUnknownNameFails) {
  const auto o = reproduce_suite("kcip_reversibility", 1);
  EXPECT_TRUE(o.passed);
  EXPECT_EQ(o.data.rows.size(), 2u);
  try {
    run_suite("nope", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigInvalid);
  }
}

TEST(Suites, SlopeMatchesOracle) {
  const std::vector<double> x{8, 16, 32}, y{54, 181, 654};
  EXPECT_NEAR(loglog_slope(x, y), oracle::slope(x, y), 1e-12);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), Error);
}
