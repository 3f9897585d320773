#pragma once

#include "mixdecomp/bounds.hpp"
#include "mixdecomp/chains.hpp"
#include "mixdecomp/error.hpp"
#include "mixdecomp/suites.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mixdecomp {

inline constexpr const char* kReportSchema = "mixdecomp.report/1";

// provenance: exact | mc(reps=..,seed=..) | formula(..)
struct Quantity {
  std::string name;
  double value = 0.0;
  std::string provenance;
};

struct Report {
  std::string schema = kReportSchema;
  std::string command;
  std::map<std::string, std::string> meta;
  std::vector<Quantity> quantities;
  std::vector<BoundResult> bounds;
  std::vector<DataTable> tables;
  std::vector<SuiteOutcome> suites;
};

std::string report_to_json(const Report& report);
Report report_from_json(const std::string& text);
// FNV-1a of the JSON text; stable for fixed seeds.
std::string report_hash(const Report& report);

enum class ReportFormat { json, csv };
ReportFormat parse_format(const std::string& name);

// JSON: report.json. CSV: quantities.csv, bounds.csv, suites.csv and one
// <table>.csv per table, each with a header row. Every file is written to a
// temporary name and renamed into place.
std::vector<std::filesystem::path> emit_report(const Report& report, const std::filesystem::path& out_dir,
                                               ReportFormat format);
void atomic_write(const std::filesystem::path& path, const std::string& content);

enum class Task { analyze, bounds, audit, reproduce };
const char* task_name(Task task);

struct ExperimentConfig {
  std::optional<ChainSpec> chain;
  std::optional<std::filesystem::path> kernel_path;
  std::string partition = "canonical";        // or a partition file
  std::vector<Task> tasks;
  PeresSousiConstants constants;
  std::optional<std::string> calibrate_on;    // chain spec of the reference instance
  double alpha = 0.45;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> suites;            // reproduce task; empty means all
  std::filesystem::path output_dir = ".";
  ReportFormat format = ReportFormat::json;
};

// Flat text with sections:
//   [chain]      spec = pince_nez:m=8 | kernel = file, partition = file|canonical
//   [tasks]      run = analyze,bounds
//   [constants]  c_alpha, c_alpha_prime, calibrate_on = <chain spec>
//   [run]        seeds = 1,2  alpha = 0.45  suites = ...  output_dir = ...  format = json|csv
// '#' starts a comment. The JSON form uses the same sections as objects.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Throws ConfigInvalid.
void validate_config(const ExperimentConfig& config);

// "c_alpha=..,c_alpha_prime=.."; a pair given this way counts as calibrated.
PeresSousiConstants parse_constants(const std::string& text);

struct LoadedChain {
  ChainInstance chain;
  std::string source;
};
LoadedChain load_chain(const ExperimentConfig& config);

struct ExperimentOutcome {
  Report report;
  std::vector<std::filesystem::path> files;
  int exit_code = 0;
};

// Runs every task and writes the report. Suite failures are recorded in the
// report and give exit code 3.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const std::string& command = "run");

// 0 success, 1 invalid input, 2 failed internal assertion, 3 failed suite.
int exit_code_for(Errc code);

// Task bodies, shared with the CLI.
void add_analysis(Report& report, const ChainInstance& chain);
void add_bounds(Report& report, const ChainInstance& chain, const PeresSousiConstants& constants,
                double regular_envelope, double alpha);
void add_audit(Report& report, const ChainInstance& chain, std::uint64_t seed);
void add_suite(Report& report, const SuiteOutcome& outcome);

}  // namespace mixdecomp
