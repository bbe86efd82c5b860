#include "leakscan/analyzer_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "leakscan/util.hpp"

namespace leakscan {

using nlohmann::json;

std::string warning_source_name(WarningSource s) {
  switch (s) {
    case WarningSource::Internal: return "Internal";
    case WarningSource::CodeQL: return "CodeQL";
    case WarningSource::Infer: return "Infer";
  }
  return "Internal";
}

std::string warning_status_name(WarningStatus s) {
  switch (s) {
    case WarningStatus::Raw: return "Raw";
    case WarningStatus::FeasibilityRetained: return "FeasibilityRetained";
    case WarningStatus::FeasibilityDiscarded: return "FeasibilityDiscarded";
    case WarningStatus::TriagedTrue: return "TriagedTrue";
    case WarningStatus::TriagedFalse: return "TriagedFalse";
    case WarningStatus::Untriaged: return "Untriaged";
  }
  return "Raw";
}

namespace {

std::optional<WarningSource> source_from_name(const std::string& n) {
  if (n == "Internal") return WarningSource::Internal;
  if (n == "CodeQL") return WarningSource::CodeQL;
  if (n == "Infer") return WarningSource::Infer;
  return std::nullopt;
}

std::optional<WarningStatus> status_from_name(const std::string& n) {
  if (n == "Raw") return WarningStatus::Raw;
  if (n == "FeasibilityRetained") return WarningStatus::FeasibilityRetained;
  if (n == "FeasibilityDiscarded") return WarningStatus::FeasibilityDiscarded;
  if (n == "TriagedTrue") return WarningStatus::TriagedTrue;
  if (n == "TriagedFalse") return WarningStatus::TriagedFalse;
  if (n == "Untriaged") return WarningStatus::Untriaged;
  return std::nullopt;
}

std::string escape_pattern(const std::string& name) {
  static const std::string meta = "\\^$.|?*+()[]{}";
  std::string out;
  for (char c : name) {
    if (meta.find(c) != std::string::npos) out += '\\';
    out += c;
  }
  return out;
}

std::string alternation(const std::vector<std::string>& names) {
  // The empty negative lookahead can never match, so the flag stays a valid
  // pattern even when a role has no validated names.
  if (names.empty()) return "^(?!)$";
  std::string out = "^(";
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) out += "|";
    out += escape_pattern(names[i]);
  }
  out += ")$";
  return out;
}

json parse_document(const std::string& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FatalError(path + ": " + e.what());
  }
}

SourceSpan span_of_physical(const json& phys) {
  SourceSpan s;
  if (phys.contains("artifactLocation") && phys["artifactLocation"].is_object())
    s.file = phys["artifactLocation"].value("uri", "");
  if (phys.contains("region") && phys["region"].is_object()) {
    s.start_line = phys["region"].value("startLine", 1);
    s.end_line = phys["region"].value("endLine", s.start_line);
  }
  return s;
}

void append_tag(Warning& w, const std::string& tag) {
  if (!w.tags.empty()) w.tags += ",";
  w.tags += tag;
}

json span_to_json(const SourceSpan& s) {
  return json{{"file", s.file}, {"start_line", s.start_line}, {"end_line", s.end_line}};
}

SourceSpan span_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw FatalError(where + ": span must be an object");
  SourceSpan s;
  s.file = j.value("file", "");
  s.start_line = j.value("start_line", 1);
  s.end_line = j.value("end_line", s.start_line);
  return s;
}

}  // namespace

std::string emit_codeql_extension(const HintsFile& validated) {
  std::vector<std::string> alloc_rows;
  std::vector<std::string> free_rows;
  // hints is an ordered map and deallocator_args is ascending, so rows come
  // out sorted by name, then by freed-argument index.
  for (const auto& [name, entries] : validated.hints) {
    if (validated.is_allocator(name))
      alloc_rows.push_back("      - [\"\", \"\", false, \"" + name + "\", \"\", \"\", \"\", true]");
    for (int arg : validated.deallocator_args(name))
      free_rows.push_back("      - [\"\", \"\", false, \"" + name + "\", \"" +
                          std::to_string(arg) + "\"]");
  }
  std::string out = "extensions:\n";
  auto block = [&out](const std::string& extensible, const std::vector<std::string>& rows) {
    out += "  - addsTo:\n";
    out += "      pack: codeql/cpp-all\n";
    out += "      extensible: " + extensible + "\n";
    if (rows.empty()) {
      out += "    data: []\n";
      return;
    }
    out += "    data:\n";
    for (const auto& r : rows) out += r + "\n";
  };
  block("allocationFunctionModel", alloc_rows);
  block("deallocationFunctionModel", free_rows);
  return out;
}

InferFlags emit_infer_flags(const HintsFile& validated) {
  std::vector<std::string> alloc_names;
  std::vector<std::string> free_names;
  for (const auto& [name, entries] : validated.hints) {
    if (validated.is_allocator(name)) alloc_names.push_back(name);
    if (!validated.deallocator_args(name).empty()) free_names.push_back(name);
  }
  return {alternation(alloc_names), alternation(free_names)};
}

std::string infer_flags_file(const InferFlags& flags) {
  return "alloc=" + flags.alloc_pattern + "\nfree=" + flags.free_pattern + "\n";
}

std::vector<Warning> ingest_codeql_results(const std::string& path,
                                           const std::set<std::string>& rule_allowlist,
                                           std::vector<std::string>* diagnostics) {
  json doc = parse_document(path);
  if (!doc.is_object() || !doc.contains("runs") || !doc["runs"].is_array())
    throw FatalError(path + ": not a SARIF document (missing runs list)");
  std::vector<Warning> out;
  int skipped = 0;
  for (const auto& run : doc["runs"]) {
    if (!run.is_object() || !run.contains("results")) continue;
    if (!run["results"].is_array())
      throw FatalError(path + ": run results must be a list");
    for (const auto& res : run["results"]) {
      if (!res.is_object()) throw FatalError(path + ": result entries must be objects");
      if (!rule_allowlist.count(res.value("ruleId", ""))) {
        ++skipped;
        continue;
      }
      Warning w;
      w.source = WarningSource::CodeQL;
      w.status = WarningStatus::Raw;
      if (res.contains("message") && res["message"].is_object())
        w.message = res["message"].value("text", "");
      if (res.contains("locations") && res["locations"].is_array() && !res["locations"].empty()) {
        const json& loc = res["locations"][0];
        if (loc.contains("physicalLocation")) {
          SourceSpan s = span_of_physical(loc["physicalLocation"]);
          w.file = s.file;
          w.line = s.start_line;
        }
        if (loc.contains("logicalLocations") && loc["logicalLocations"].is_array() &&
            !loc["logicalLocations"].empty()) {
          const json& logical = loc["logicalLocations"][0];
          w.function = logical.value("name", logical.value("fullyQualifiedName", ""));
        }
      }
      if (res.contains("codeFlows") && res["codeFlows"].is_array() && !res["codeFlows"].empty()) {
        const json& flow = res["codeFlows"][0];
        if (flow.contains("threadFlows") && flow["threadFlows"].is_array() &&
            !flow["threadFlows"].empty()) {
          for (const auto& step : flow["threadFlows"][0].value("locations", json::array())) {
            if (!step.is_object() || !step.contains("location")) continue;
            const json& loc = step["location"];
            TraceStep t;
            if (loc.contains("physicalLocation")) t.span = span_of_physical(loc["physicalLocation"]);
            if (loc.contains("message") && loc["message"].is_object())
              t.text = loc["message"].value("text", "");
            w.trace.push_back(std::move(t));
          }
          if (!w.trace.empty()) w.allocation_site = w.trace.front().span;
        }
      }
      out.push_back(std::move(w));
    }
  }
  if (skipped > 0 && diagnostics)
    diagnostics->push_back(path + ": skipped " + std::to_string(skipped) +
                           " result(s) outside the rule allowlist");
  return out;
}

std::vector<Warning> ingest_infer_results(const std::string& path,
                                          const std::set<std::string>& rule_allowlist,
                                          std::vector<std::string>* diagnostics) {
  json doc = parse_document(path);
  if (!doc.is_array())
    throw FatalError(path + ": not an Infer report (expected a top-level issue list)");
  std::vector<Warning> out;
  int skipped = 0;
  for (const auto& issue : doc) {
    if (!issue.is_object()) throw FatalError(path + ": issue entries must be objects");
    if (!rule_allowlist.count(issue.value("bug_type", ""))) {
      ++skipped;
      continue;
    }
    Warning w;
    w.source = WarningSource::Infer;
    w.status = WarningStatus::Raw;
    w.file = issue.value("file", "");
    w.function = issue.value("procedure", "");
    w.line = issue.value("line", 0);
    w.message = issue.value("qualifier", "");
    if (issue.contains("bug_trace") && issue["bug_trace"].is_array()) {
      for (const auto& step : issue["bug_trace"]) {
        if (!step.is_object()) continue;
        TraceStep t;
        t.span.file = step.value("filename", "");
        t.span.start_line = step.value("line_number", 1);
        t.span.end_line = t.span.start_line;
        t.text = step.value("description", "");
        w.trace.push_back(std::move(t));
      }
      if (!w.trace.empty()) w.allocation_site = w.trace.front().span;
    }
    out.push_back(std::move(w));
  }
  if (skipped > 0 && diagnostics)
    diagnostics->push_back(path + ": skipped " + std::to_string(skipped) +
                           " issue(s) outside the bug-type allowlist");
  return out;
}

MergeOutcome merge_warnings(const std::vector<std::vector<Warning>>& source_lists) {
  MergeOutcome out;
  // The representative anchors its group: later warnings join when they name
  // the same file and function and their allocation line lands within 2 of
  // the representative's. Matching is not transitive by design; it mirrors
  // the site-matching tolerance used when re-checking external warnings.
  struct Anchor {
    std::string file;
    std::string function;
    int line;
  };
  std::vector<Anchor> anchors;
  auto line_of = [](const Warning& w) {
    return w.allocation_site ? w.allocation_site->start_line : w.line;
  };
  for (const auto& list : source_lists) {
    for (const auto& w : list) {
      out.per_source[warning_source_name(w.source)]++;
      int line = line_of(w);
      size_t found = anchors.size();
      for (size_t i = 0; i < anchors.size(); ++i) {
        if (anchors[i].file == w.file && anchors[i].function == w.function &&
            std::abs(anchors[i].line - line) <= 2) {
          found = i;
          break;
        }
      }
      if (found == anchors.size()) {
        anchors.push_back({w.file, w.function, line});
        out.merged.push_back(w);
        out.merged.back().merged_sources.insert(w.source);
      } else {
        Warning& rep = out.merged[found];
        rep.merged_sources.insert(w.source);
        rep.merged_sources.insert(w.merged_sources.begin(), w.merged_sources.end());
      }
    }
  }
  for (auto& w : out.merged) {
    if (w.merged_sources.size() <= 1) continue;
    ++out.overlap;
    if (w.tags.find("multi-source") == std::string::npos) append_tag(w, "multi-source");
  }
  return out;
}

std::string warnings_to_json(const std::vector<Warning>& ws) {
  json arr = json::array();
  for (const auto& w : ws) {
    json rec{{"source", warning_source_name(w.source)},
             {"file", w.file},
             {"function", w.function},
             {"line", w.line},
             {"message", w.message},
             {"category", w.category},
             {"status", warning_status_name(w.status)}};
    if (!w.merged_sources.empty()) {
      json names = json::array();
      for (WarningSource s : w.merged_sources) names.push_back(warning_source_name(s));
      rec["merged_sources"] = names;
    }
    if (w.allocation_site) rec["allocation_site"] = span_to_json(*w.allocation_site);
    if (!w.trace.empty()) {
      json steps = json::array();
      for (const auto& t : w.trace) {
        json step = span_to_json(t.span);
        step["text"] = t.text;
        steps.push_back(step);
      }
      rec["trace"] = steps;
    }
    if (w.triage)
      rec["triage"] = json{{"verdict", w.triage->verdict},
                           {"confidence", w.triage->confidence},
                           {"reason", w.triage->reason}};
    if (!w.tags.empty()) rec["tags"] = w.tags;
    arr.push_back(rec);
  }
  json doc{{"version", 1}, {"warnings", arr}};
  return doc.dump(2) + "\n";
}

std::vector<Warning> warnings_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FatalError(std::string("malformed warning report: ") + e.what());
  }
  if (!doc.is_object() || doc.value("version", 0) != 1)
    throw FatalError("warning report version is missing or unsupported (expected 1)");
  if (!doc.contains("warnings") || !doc["warnings"].is_array())
    throw FatalError("warning report must carry a \"warnings\" list");
  std::vector<Warning> out;
  int index = 0;
  for (const auto& rec : doc["warnings"]) {
    std::string where = "warnings[" + std::to_string(index++) + "]";
    if (!rec.is_object()) throw FatalError(where + ": record must be an object");
    Warning w;
    auto source = source_from_name(rec.value("source", ""));
    if (!source) throw FatalError(where + ": unknown source " + rec.value("source", ""));
    w.source = *source;
    w.file = rec.value("file", "");
    w.function = rec.value("function", "");
    w.line = rec.value("line", 0);
    w.message = rec.value("message", "");
    w.category = rec.value("category", "memory-leak");
    auto status = status_from_name(rec.value("status", ""));
    if (!status) throw FatalError(where + ": unknown status " + rec.value("status", ""));
    w.status = *status;
    if (rec.contains("merged_sources")) {
      if (!rec["merged_sources"].is_array())
        throw FatalError(where + ": merged_sources must be a list");
      for (const auto& n : rec["merged_sources"]) {
        auto s = source_from_name(n.is_string() ? n.get<std::string>() : "");
        if (!s) throw FatalError(where + ": unknown merged source " + n.dump());
        w.merged_sources.insert(*s);
      }
    }
    if (rec.contains("allocation_site"))
      w.allocation_site = span_from_json(rec["allocation_site"], where + ".allocation_site");
    if (rec.contains("trace")) {
      if (!rec["trace"].is_array()) throw FatalError(where + ": trace must be a list");
      for (const auto& step : rec["trace"]) {
        TraceStep t;
        t.span = span_from_json(step, where + ".trace");
        t.text = step.value("text", "");
        w.trace.push_back(std::move(t));
      }
    }
    if (rec.contains("triage")) {
      const json& tri = rec["triage"];
      if (!tri.is_object()) throw FatalError(where + ": triage must be an object");
      TriageOutcome o;
      o.verdict = tri.value("verdict", false);
      o.confidence = tri.value("confidence", 0.0);
      o.reason = tri.value("reason", "");
      w.triage = o;
    }
    w.tags = rec.value("tags", "");
    out.push_back(std::move(w));
  }
  return out;
}

std::string warnings_to_text(const std::vector<Warning>& ws) {
  std::string out = "source|file|line|function|status|tags|message\n";
  for (const auto& w : ws) {
    out += warning_source_name(w.source) + "|" + w.file + "|" + std::to_string(w.line) + "|" +
           w.function + "|" + warning_status_name(w.status) + "|" + w.tags + "|" + w.message +
           "\n";
  }
  return out;
}

}  // namespace leakscan
