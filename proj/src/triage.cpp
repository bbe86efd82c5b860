#include "leakscan/triage.hpp"

#include <set>

#include <json.hpp>

#include "leakscan/util.hpp"

namespace leakscan {

using nlohmann::json;

namespace {

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

/// Extent of the balanced JSON object starting at `start`, string-aware.
/// Returns npos when unbalanced.
std::size_t balanced_object_end(const std::string& text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i;
  }
  return std::string::npos;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  // A trailing newline would leave a phantom empty line behind the function.
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string location_of(const SourceSpan& span) {
  return span.file + ":" + std::to_string(span.start_line);
}

}  // namespace

std::string build_triage_prompt(const TriagePromptInput& input,
                                std::vector<std::string>* diagnostics) {
  std::vector<std::string> lines = split_lines(input.function_source);
  int first = input.source_first_line;
  int past = first + static_cast<int>(lines.size());
  auto code_at = [&](int line) { return trim(lines[line - first]); };

  std::string issues;
  std::set<int> marked;
  for (std::size_t i = 0; i < input.warnings.size(); ++i) {
    const Warning& w = input.warnings[i];
    issues += "  " + std::to_string(i + 1) + ". Line " + std::to_string(w.line) + ": " +
              w.message + "\n";
    if (w.allocation_site)
      issues += "    allocation_site: " + location_of(*w.allocation_site) + "\n";
    for (std::size_t s = 0; s < w.trace.size(); ++s) {
      const TraceStep& t = w.trace[s];
      issues += "    trace step " + std::to_string(s + 1) + ": " + location_of(t.span) + "\n";
      if (t.span.file == input.file && t.span.start_line >= first && t.span.start_line < past)
        issues += "    code at that step:\n      " + code_at(t.span.start_line) + "\n";
    }
    if (w.line >= first && w.line < past) {
      issues += "    code at line " + std::to_string(w.line) + ":\n      " + code_at(w.line) +
                "\n";
      marked.insert(w.line);
    } else if (diagnostics) {
      diagnostics->push_back("issue " + std::to_string(i + 1) + ": reported line " +
                             std::to_string(w.line) + " is outside the shown source");
    }
  }
  if (!issues.empty()) issues.pop_back();  // the template supplies the line break

  std::string marked_source;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) marked_source += "\n";
    marked_source += lines[i];
    if (marked.count(first + static_cast<int>(i))) marked_source += " // <-- reported bug";
  }

  std::string prompt = triage_prompt_template();
  replace_all(prompt, "{project_name}", input.project_name);
  replace_all(prompt, "{file}", input.file);
  replace_all(prompt, "{function}", input.function);
  replace_all(prompt, "{category}", input.category);
  replace_all(prompt, "{issues}", issues);
  replace_all(prompt, "{source}", marked_source);
  replace_all(prompt, "{bug_type_desc}", input.category);
  return prompt;
}

TriageVerdict parse_triage_verdict(const std::string& response) {
  json doc;
  bool found = false;
  for (std::size_t pos = response.find('{'); pos != std::string::npos;
       pos = response.find('{', pos + 1)) {
    std::size_t end = balanced_object_end(response, pos);
    if (end == std::string::npos) continue;
    json candidate = json::parse(response.substr(pos, end - pos + 1), nullptr, false);
    if (candidate.is_discarded() || !candidate.is_object()) continue;
    if (!candidate.contains("verdict") || !candidate.contains("confidence") ||
        !candidate.contains("reason") || !candidate.contains("bug_indices"))
      continue;
    doc = std::move(candidate);
    found = true;
    break;
  }
  if (!found)
    throw TriageParseError("no verdict object with the four required keys in the response");
  if (!doc["verdict"].is_boolean()) throw TriageParseError("verdict must be a boolean");
  if (!doc["confidence"].is_number()) throw TriageParseError("confidence must be a number");
  if (!doc["reason"].is_string()) throw TriageParseError("reason must be a string");
  if (!doc["bug_indices"].is_array()) throw TriageParseError("bug_indices must be a list");
  TriageVerdict v;
  v.verdict = doc["verdict"].get<bool>();
  v.confidence = doc["confidence"].get<double>();
  if (v.confidence < 0.0 || v.confidence > 1.0)
    throw TriageParseError("confidence must lie in [0, 1]");
  v.reason = doc["reason"].get<std::string>();
  for (const auto& e : doc["bug_indices"]) {
    if (!e.is_number_integer()) throw TriageParseError("bug_indices must hold integers");
    int idx = e.get<int>();
    if (idx < 1) throw TriageParseError("bug indices are 1-based");
    v.bug_indices.push_back(idx);
  }
  if (!v.verdict && !v.bug_indices.empty())
    throw TriageParseError("a false verdict cannot name bug indices");
  return v;
}

void apply_triage_verdict(std::vector<Warning*>& function_warnings, const TriageVerdict& v) {
  std::set<int> keep(v.bug_indices.begin(), v.bug_indices.end());
  for (std::size_t i = 0; i < function_warnings.size(); ++i) {
    Warning* w = function_warnings[i];
    bool kept = v.verdict && keep.count(static_cast<int>(i) + 1) > 0;
    w->status = kept ? WarningStatus::TriagedTrue : WarningStatus::TriagedFalse;
    w->triage = TriageOutcome{kept, v.confidence, v.reason};
  }
}

void apply_untriaged(std::vector<Warning*>& function_warnings) {
  for (Warning* w : function_warnings) w->status = WarningStatus::Untriaged;
}

const std::string& triage_prompt_template() {
  static const std::string kTemplate =
      R"PROMPT(You are a memory-safety expert. Analyze the following C function and the reported bug(s).

**Project:** {project_name}
**File:** {file}
**Function:** {function}
**Reported category:** {category}

**Reported issues (numbered 1, 2, ... for reference):**
{issues}

**Function source:**
```c
{source}
```

Role: You are a senior static-analysis engineer specializing in C/C++ memory-safety.
You review memory-leak bug reports and assess whether the reported findings correspond to actual memory-leak defects in the program.

Does this function actually have a {bug_type_desc}? Determine whether the reported issue is a genuine bug (true) or a false alarm (false).

Decision policy:
  - true: at least one reported issue plausibly corresponds to a real memory leak based on the shown code.
  - false: all reported issues are not real defects based on the shown code.

If only some issues are real, output true and list only the real ones by index (1 = first, 2 = second, ...).

Respond with a single JSON object, no other text. Keep reason SHORT:
  {"verdict": true | false, "confidence": 0.0-1.0, "reason": "one short sentence", "bug_indices": [1] or [2,3] or []}

Output rules:
  - bug_indices: 1-based indices of reported issues you consider real; [] when verdict=false.
  - reason: ONE short sentence only. Do not quote code.
)PROMPT";
  return kTemplate;
}

}  // namespace leakscan
