#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "leakscan/extraction.hpp"
#include "leakscan/summaries.hpp"

namespace leakscan {

enum class WarningSource { Internal, CodeQL, Infer };

/// Lifecycle is monotone: Raw -> FeasibilityRetained/FeasibilityDiscarded ->
/// TriagedTrue/TriagedFalse/Untriaged.
enum class WarningStatus {
  Raw,
  FeasibilityRetained,
  FeasibilityDiscarded,
  TriagedTrue,
  TriagedFalse,
  Untriaged,
};

struct TraceStep {
  SourceSpan span;
  std::string text;
};

struct TriageOutcome {
  bool verdict = false;
  double confidence = 0.0;
  std::string reason;
};

struct Warning {
  WarningSource source = WarningSource::Internal;
  std::set<WarningSource> merged_sources;  // populated by merge_warnings
  std::string file;
  std::string function;
  int line = 0;
  std::string message;
  std::string category = "memory-leak";
  std::optional<SourceSpan> allocation_site;
  std::vector<TraceStep> trace;
  WarningStatus status = WarningStatus::Raw;
  std::optional<TriageOutcome> triage;
  std::string tags;  // e.g. "not-analyzable" when feasibility could not run
};

std::string warning_source_name(WarningSource s);
std::string warning_status_name(WarningStatus s);

/// CodeQL data-extension YAML for the validated summaries: an
/// allocationFunctionModel row per allocator, a deallocationFunctionModel row
/// per deallocator with its freed-argument index. Rows are sorted by name
/// (then index) and the document layout is fixed, so equal inputs produce
/// identical bytes. Empty roles still emit their block with an empty list.
std::string emit_codeql_extension(const HintsFile& validated);

struct InferFlags {
  std::string alloc_pattern;
  std::string free_pattern;
};

/// Anchored alternation over the validated names with regex metacharacters
/// escaped, e.g. ^(a|b)$. A role with no names yields `^(?!)$`, a
/// deliberately unmatchable constant (empty negative lookahead), so the flag
/// stays well-formed without matching anything.
InferFlags emit_infer_flags(const HintsFile& validated);

/// Two-line flag file: `alloc=<pattern>` and `free=<pattern>`.
std::string infer_flags_file(const InferFlags& flags);

/// SARIF 2.1.0 ingestion. Results whose ruleId is outside `rule_allowlist`
/// are skipped with a diagnostic. The first code-flow location is recorded as
/// the allocation site; thread-flow steps become the trace. Unknown fields
/// are ignored; a file that is not SARIF at all is fatal.
std::vector<Warning> ingest_codeql_results(const std::string& path,
                                           const std::set<std::string>& rule_allowlist,
                                           std::vector<std::string>* diagnostics = nullptr);

/// Infer report.json ingestion (native array-of-issues format); bug types
/// outside the allowlist are skipped with a diagnostic.
std::vector<Warning> ingest_infer_results(const std::string& path,
                                          const std::set<std::string>& rule_allowlist,
                                          std::vector<std::string>* diagnostics = nullptr);

inline const std::set<std::string>& default_rule_allowlist() {
  static const std::set<std::string> k = {
      "cpp/memory-never-freed", "cpp/memory-may-not-be-freed", "MEMORY_LEAK",
      "MEMORY_LEAK_C",          "MEMORY_LEAK_CPP",             "PULSE_MEMORY_LEAK"};
  return k;
}

struct MergeOutcome {
  std::vector<Warning> merged;
  std::map<std::string, int> per_source;  // source name -> input warning count
  int overlap = 0;                        // merged records fed by >1 source
};

/// Groups warnings reporting the same leak: same file and function, and
/// allocation lines within +/-2 of the group representative. The survivor
/// keeps the representative's fields and collects merged_sources.
MergeOutcome merge_warnings(const std::vector<std::vector<Warning>>& source_lists);

/// Versioned machine-readable warning report.
std::string warnings_to_json(const std::vector<Warning>& ws);
std::vector<Warning> warnings_from_json(const std::string& text);
std::string warnings_to_text(const std::vector<Warning>& ws);

}  // namespace leakscan
