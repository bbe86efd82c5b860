#include "leakscan/summaries.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "leakscan/util.hpp"

namespace leakscan {

using nlohmann::json;

std::string OwnershipTarget::to_string() const {
  return is_return ? "return" : "arg" + std::to_string(arg_index);
}

FunctionSummary FunctionSummary::make(std::string name, MmRole role, OwnershipTarget target,
                                      Provenance prov) {
  auto s = try_make(std::move(name), role, target, prov);
  if (!s)
    throw std::invalid_argument(
        "summary role/target mismatch: allocators own the return value, "
        "deallocators an argument");
  return *s;
}

std::optional<FunctionSummary> FunctionSummary::try_make(std::string name, MmRole role,
                                                         OwnershipTarget target,
                                                         Provenance prov) {
  if (role == MmRole::Allocator && !target.is_return) return std::nullopt;
  if (role == MmRole::Deallocator && (target.is_return || target.arg_index < 0))
    return std::nullopt;
  FunctionSummary s;
  s.name = std::move(name);
  s.role = role;
  s.target = target;
  s.provenance = prov;
  return s;
}

void HintsFile::merge(const FunctionSummary& s) {
  auto& list = hints[s.name];
  for (auto& existing : list) {
    if (existing.same_fact(s)) {
      existing.validated = existing.validated || s.validated;
      return;
    }
  }
  list.push_back(s);
  std::stable_sort(list.begin(), list.end(), [](const FunctionSummary& a, const FunctionSummary& b) {
    if (a.role != b.role) return a.role == MmRole::Allocator;
    return a.target < b.target;
  });
}

void HintsFile::merge_all(const std::vector<FunctionSummary>& list) {
  for (const auto& s : list) merge(s);
}

std::vector<FunctionSummary> HintsFile::flatten() const {
  std::vector<FunctionSummary> out;
  for (const auto& [name, list] : hints) {
    (void)name;
    out.insert(out.end(), list.begin(), list.end());
  }
  return out;
}

bool HintsFile::is_allocator(const std::string& name) const {
  auto it = hints.find(name);
  if (it == hints.end()) return false;
  for (const auto& s : it->second)
    if (s.role == MmRole::Allocator) return true;
  return false;
}

std::vector<int> HintsFile::deallocator_args(const std::string& name) const {
  std::vector<int> out;
  auto it = hints.find(name);
  if (it == hints.end()) return out;
  for (const auto& s : it->second)
    if (s.role == MmRole::Deallocator) out.push_back(s.target.arg_index);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool HintsFile::operator==(const HintsFile& o) const {
  if (hints.size() != o.hints.size()) return false;
  for (const auto& [name, list] : hints) {
    auto it = o.hints.find(name);
    if (it == o.hints.end() || it->second.size() != list.size()) return false;
    for (std::size_t i = 0; i < list.size(); ++i)
      if (!list[i].same_fact(it->second[i]) || list[i].validated != it->second[i].validated)
        return false;
  }
  return true;
}

std::string hints_to_json(const HintsFile& h) {
  json doc;
  doc["hints"] = json::object();
  for (const auto& [name, list] : h.hints) {
    if (list.empty()) continue;
    json entries = json::array();
    for (const auto& s : list) {
      json e;
      e["name"] = s.name;
      e["role"] = s.role == MmRole::Allocator ? "Allocator" : "Deallocator";
      e["target"] = s.target.to_string();
      if (s.validated) e["validated"] = true;
      entries.push_back(std::move(e));
    }
    doc["hints"][name] = std::move(entries);
  }
  return doc.dump(2) + "\n";
}

void write_hints(const HintsFile& h, const std::string& path) {
  write_file_if_changed(path, hints_to_json(h));
}

void write_hints(const std::vector<FunctionSummary>& summaries, const std::string& path) {
  HintsFile h;
  h.merge_all(summaries);
  write_hints(h, path);
}

namespace {

std::optional<OwnershipTarget> parse_target(const std::string& text) {
  if (text == "return") return OwnershipTarget::ret();
  if (text.rfind("arg", 0) == 0 && text.size() > 3) {
    int idx = 0;
    for (std::size_t i = 3; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      idx = idx * 10 + (text[i] - '0');
    }
    return OwnershipTarget::arg(idx);
  }
  return std::nullopt;
}

std::optional<MmRole> parse_role(const std::string& text) {
  if (text == "Allocator") return MmRole::Allocator;
  if (text == "Deallocator") return MmRole::Deallocator;
  return std::nullopt;
}

}  // namespace

HintsFile hints_from_json(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FatalError(origin + ": malformed hints document: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("hints") || !doc["hints"].is_object())
    throw FatalError(origin + ": hints document must be an object with a \"hints\" object");
  HintsFile out;
  for (auto it = doc["hints"].begin(); it != doc["hints"].end(); ++it) {
    if (!it.value().is_array())
      throw FatalError(origin + ": hints." + it.key() + " must be a list");
    int index = 0;
    for (const auto& e : it.value()) {
      std::string where = origin + ": hints." + it.key() + "[" + std::to_string(index++) + "]";
      if (!e.is_object()) throw FatalError(where + ": entry must be an object");
      std::string name = e.value("name", it.key());
      if (name != it.key())
        throw FatalError(where + ": entry name \"" + name + "\" does not match its key");
      if (!e.contains("role") || !e["role"].is_string())
        throw FatalError(where + ": missing role");
      auto role = parse_role(e["role"].get<std::string>());
      if (!role) throw FatalError(where + ": unknown role " + e["role"].dump());
      if (!e.contains("target") || !e["target"].is_string())
        throw FatalError(where + ": missing target");
      auto target = parse_target(e["target"].get<std::string>());
      if (!target) throw FatalError(where + ": unknown target " + e["target"].dump());
      auto s = FunctionSummary::try_make(name, *role, *target, Provenance::Manual);
      if (!s)
        throw FatalError(where + ": role " + e["role"].get<std::string>() +
                         " cannot own " + e["target"].get<std::string>());
      s->validated = e.value("validated", false);
      out.merge(*s);
    }
  }
  return out;
}

HintsFile read_hints(const std::string& path) {
  auto content = read_file_if_exists(path);
  if (!content) throw FatalError("cannot read hints file " + path);
  return hints_from_json(*content, path);
}

std::vector<const FunctionRecord*> select_context_callees(const FunctionRecord& rec,
                                                          const Codebase& cb, int limit) {
  std::vector<const FunctionRecord*> out;
  for (const auto& callee : rec.callees) {
    if (static_cast<int>(out.size()) >= limit) break;
    if (callee == rec.name) continue;
    const FunctionRecord* r = cb.find(callee);
    if (r) out.push_back(r);
  }
  return out;
}

namespace {

std::string render_params(const FunctionRecord& rec) {
  if (rec.params.empty()) return "void";
  std::string out;
  for (std::size_t i = 0; i < rec.params.size(); ++i) {
    if (i) out += ", ";
    if (rec.params[i].type.empty()) {
      out += rec.params[i].name;
    } else {
      out += rec.params[i].type;
      if (!rec.params[i].name.empty()) out += " " + rec.params[i].name;
    }
  }
  return out;
}

std::string render_source(const FunctionRecord& rec) {
  if (rec.kind == RecordKind::Macro) {
    std::string params;
    for (std::size_t i = 0; i < rec.params.size(); ++i) {
      if (i) params += ", ";
      params += rec.params[i].name;
    }
    return "#define " + rec.name + "(" + params + ") " + rec.body;
  }
  return rec.return_type + " " + rec.name + "(" + render_params(rec) + ")\n{" + rec.body + "}";
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

const std::string& classification_prompt_template() {
  static const std::string kTemplate = R"PROMPT(You are a memory safety expert analyzing C/C++ code to identify function semantics that help static analyzers detect memory leaks.

## Task
Analyze this function and determine whether it is a memory allocator, deallocator, or neither.

**Function:** `{func_name}`
**Return type:** `{return_type}`
**Parameters:** `{parameters}`

```c
{code}
```
{context}

## Semantic Categories

### Allocator
Function returns **newly allocated heap memory** that caller must eventually free.

**Positive indicators:**
- Calls malloc/calloc/realloc/aligned_alloc/new/new[] and returns the result
- Calls another known allocator (e.g., g_malloc, xmalloc, kmalloc) and returns result
- Returns result of a wrapper function that allocates

**Negative indicators (NOT an allocator):**
- Returns pointer to static/global buffer
- Returns pointer to struct field or array member
- Returns one of the input arguments
- Allocates internally but doesn't return the allocated memory
- Returns stack-allocated memory (dangling pointer bug, but not allocator semantic)

### Deallocator
Function **frees/releases memory** passed as an argument.

**Positive indicators:**
- Calls free/delete/delete[]/g_free/kfree on an argument
- Calls another deallocator on an argument
- Wrapper around resource cleanup

## Analysis Guidelines

1. **Trace data flow:** Follow where return values come from and where arguments flow to.
2. **Consider all paths:** Check all branches and return statements.
3. **Indirect calls matter:** If function calls helper that allocates/frees, propagate that semantic.
4. **Be precise:** Only report semantics you can verify from the code.

## Output Format

Return a JSON object with a `hints` array. Each hint is a function summary with:
- `name`: the function name
- `role`: "Allocator" or "Deallocator"
- `target`: "return" for allocators (return value carries heap ownership), or "argN" for deallocators (the N-th argument is freed, 0-indexed)

```json
{
    "hints": [
        {"name": "{func_name}", "role": "Allocator", "target": "return"},
        {"name": "{func_name}", "role": "Deallocator", "target": "arg0"}
    ]
}
```

If no memory semantics apply, return: `{"hints": []}`

Now analyze the function above and return the JSON result.
)PROMPT";
  return kTemplate;
}

std::string build_classification_prompt(const FunctionRecord& rec,
                                        const std::vector<const FunctionRecord*>& callees) {
  std::string prompt = classification_prompt_template();
  std::string context;
  if (!callees.empty()) {
    context = "\n## Context: called functions\n";
    for (const auto* c : callees) {
      context += "\n### `" + c->name + "`\n```c\n" + render_source(*c) + "\n```\n";
    }
  }
  replace_all(prompt, "{return_type}",
              rec.kind == RecordKind::Macro ? "(macro)" : rec.return_type);
  replace_all(prompt, "{parameters}", render_params(rec));
  replace_all(prompt, "{code}", render_source(rec));
  replace_all(prompt, "{context}", context);
  replace_all(prompt, "{func_name}", rec.name);
  return prompt;
}

std::string build_batch_prompt(const std::vector<const FunctionRecord*>& records,
                               const Codebase& cb) {
  std::string out = "You will analyze " + std::to_string(records.size()) +
                    " functions. Apply the instructions inside every section, then return "
                    "ONE combined JSON object {\"hints\": [...]} covering all sections.\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += "\n===== FUNCTION " + std::to_string(i + 1) + " of " +
           std::to_string(records.size()) + " =====\n\n";
    out += build_classification_prompt(*records[i], select_context_callees(*records[i], cb));
  }
  return out;
}

namespace {

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

}  // namespace

ParsedHints parse_hints_response(const std::string& response,
                                 const std::set<std::string>& expected_names) {
  ParsedHints out;
  json doc;
  bool found = false;
  for (std::size_t pos = response.find('{'); pos != std::string::npos;
       pos = response.find('{', pos + 1)) {
    std::size_t end = balanced_object_end(response, pos);
    if (end == std::string::npos) continue;
    json candidate = json::parse(response.substr(pos, end - pos + 1), nullptr, false);
    if (candidate.is_discarded() || !candidate.is_object()) continue;
    if (!candidate.contains("hints") || !candidate["hints"].is_array()) continue;
    doc = std::move(candidate);
    found = true;
    break;
  }
  if (!found) {
    out.diagnostics.push_back("no hints object found in model response");
    return out;
  }
  for (const auto& e : doc["hints"]) {
    if (!e.is_object() || !e.contains("name") || !e["name"].is_string()) {
      out.diagnostics.push_back("dropped hint entry without a name: " + e.dump());
      continue;
    }
    std::string name = e["name"].get<std::string>();
    if (!expected_names.empty() && !expected_names.count(name)) {
      out.diagnostics.push_back("dropped hint for unexpected function " + name);
      continue;
    }
    if (!e.contains("role") || !e["role"].is_string()) {
      out.diagnostics.push_back("dropped hint for " + name + ": missing role");
      continue;
    }
    auto role = parse_role(e["role"].get<std::string>());
    if (!role) {
      out.diagnostics.push_back("dropped hint for " + name + ": unknown role " +
                                e["role"].dump());
      continue;
    }
    if (!e.contains("target") || !e["target"].is_string()) {
      out.diagnostics.push_back("dropped hint for " + name + ": missing target");
      continue;
    }
    auto target = parse_target(e["target"].get<std::string>());
    if (!target) {
      out.diagnostics.push_back("dropped hint for " + name + ": unknown target " +
                                e["target"].dump());
      continue;
    }
    auto s = FunctionSummary::try_make(name, *role, *target, Provenance::ModelGenerated);
    if (!s) {
      out.diagnostics.push_back("dropped hint for " + name + ": role " +
                                e["role"].get<std::string>() + " cannot own " +
                                e["target"].get<std::string>());
      continue;
    }
    out.summaries.push_back(*s);
  }
  return out;
}

}  // namespace leakscan
