#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "leakscan/analyzer_bridge.hpp"
#include "leakscan/cfg.hpp"
#include "leakscan/extraction.hpp"
#include "leakscan/feasibility.hpp"
#include "leakscan/llm_client.hpp"
#include "leakscan/summary_validation.hpp"

namespace leakscan {

enum class Stage { Extract, Summarize, Validate, Emit, Scan, Filter, Triage, Report };

std::optional<Stage> stage_from_name(const std::string& name);
std::string stage_name(Stage s);

struct PipelineConfig {
  std::string root;           // codebase under analysis
  std::string out_dir;        // artifact directory
  std::string project_name = "project";

  ExtractionConfig extraction;
  std::vector<std::string> alloc_primitives = {"malloc", "calloc",       "realloc",
                                               "strdup", "aligned_alloc", "new"};
  std::vector<std::string> free_primitives = {"free", "delete"};
  std::vector<std::string> sink_calls;

  int call_depth = 10;
  int path_cap = kDefaultPathCap;
  long solver_budget = 5'000'000;
  bool share_conditions = true;
  bool allow_field_frees = false;
  bool success_guards = true;

  bool offline = false;       // heuristic classification + replay cache only
  bool deterministic = false; // serialize parallel sections
  int jobs = 0;               // 0 = hardware concurrency
  bool fail_on_findings = false;

  std::vector<std::string> rule_allowlist;   // empty -> built-in default
  std::vector<std::string> suppressions;     // function names dropped at triage
  std::vector<std::string> codeql_results;   // SARIF files to ingest
  std::vector<std::string> infer_results;    // Infer report.json files

  ClientConfig generation_client;  // stage 1 profile
  ClientConfig triage_client;      // stage 3 profile

  CfgBuildOptions cfg_options() const;
  LeakOptions leak_options() const;
  ValidationOptions validation_options() const;
};

/// Loads PipelineConfig fields from a JSON document; unknown keys are fatal
/// (misspelled options must not be silently ignored).
void apply_config_file(PipelineConfig& cfg, const std::string& path);

struct StageCounters {
  int extracted = 0;
  int candidates = 0;
  int summaries = 0;
  int validated = 0;
  int warnings = 0;
  int after_feasibility = 0;
  int after_triage = 0;
};

/// Runs the requested stages in pipeline order. Artifacts land under
/// out_dir; a stage whose inputs are missing is fatal and names the stage to
/// run first. Returns counters for the stages that ran. Artifact writes are
/// skipped when the bytes are unchanged, so re-running a stage on unchanged
/// input is a no-op.
StageCounters run_pipeline(const PipelineConfig& cfg, const std::vector<Stage>& stages,
                           std::ostream& log);

std::string report_to_json(const StageCounters& c);
std::string report_to_text(const StageCounters& c);

}  // namespace leakscan
