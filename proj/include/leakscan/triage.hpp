#pragma once

#include <optional>
#include <string>
#include <vector>

#include "leakscan/analyzer_bridge.hpp"
#include "leakscan/extraction.hpp"

namespace leakscan {

/// Strict triage verdict: all four keys required, no coercion.
/// verdict=false implies bug_indices empty; confidence lives in [0,1].
struct TriageVerdict {
  bool verdict = false;
  double confidence = 0.0;
  std::string reason;
  std::vector<int> bug_indices;  // 1-based indices into the prompt's issue list
};

struct TriagePromptInput {
  std::string project_name;
  std::string file;
  std::string function;
  std::string category = "memory leak";
  std::string function_source;   // full text, used verbatim
  int source_first_line = 1;     // line number of function_source's first line
  std::vector<Warning> warnings; // all issues for this function, prompt order
};

/// Review prompt for one function: numbered issues with allocation sites and
/// trace steps, the function source with `// <-- reported bug` markers
/// appended to each reported line, and the strict output contract. A
/// reported line outside the source keeps its issue but drops the marker
/// with a diagnostic.
std::string build_triage_prompt(const TriagePromptInput& input,
                                std::vector<std::string>* diagnostics = nullptr);

struct TriageParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Extracts the first JSON object carrying the four-key verdict schema from
/// free-form model output. Missing keys, wrong types, confidence outside
/// [0,1], or a false verdict with nonempty bug_indices all throw
/// TriageParseError; callers route that to Untriaged.
TriageVerdict parse_triage_verdict(const std::string& response);

/// Applies one function's verdict to its warnings (prompt order): a true
/// verdict keeps exactly the issues named in bug_indices as TriagedTrue and
/// drops the rest as TriagedFalse; a false verdict drops them all.
void apply_triage_verdict(std::vector<Warning*>& function_warnings, const TriageVerdict& v);

/// Marks every warning Untriaged (no verdict available); conservative keep.
void apply_untriaged(std::vector<Warning*>& function_warnings);

const std::string& triage_prompt_template();  // versioned asset text

}  // namespace leakscan
