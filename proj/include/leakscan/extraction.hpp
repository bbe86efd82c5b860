#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace leakscan {

struct SourceSpan {
  std::string file;
  int start_line = 1;
  int end_line = 1;
};

enum class RecordKind { Function, Macro };

struct Param {
  std::string name;
  std::string type;
};

/// One function definition or function-like macro, recorded textually.
/// Macro records keep the replacement text as `body` and have no return type.
struct FunctionRecord {
  std::string name;
  RecordKind kind = RecordKind::Function;
  std::string return_type;
  std::vector<Param> params;
  std::string body;        // between braces, exclusive; macro replacement text
  int body_first_line = 1; // line of the first body byte, for node spans
  std::vector<std::string> callees;  // direct call positions, first-seen order
  SourceSpan span;

  int param_index(const std::string& name) const;
};

struct AliasEntry {
  std::string underlying;
  bool pointer_like = false;
  bool cycle_flagged = false;
};

/// Typedef table with transitive pointer-likeness. Cycles are broken and
/// flagged; a name is pointer-like iff its expansion reaches a `*` declarator.
struct PointerAliasTable {
  std::map<std::string, AliasEntry> entries;

  bool known(const std::string& name) const { return entries.count(name) != 0; }
  bool pointer_like(const std::string& name) const;

  /// Recomputes `pointer_like` for every entry from the raw underlying texts.
  void resolve();
};

struct Codebase {
  std::string root;
  std::vector<FunctionRecord> records;
  PointerAliasTable alias_table;
  /// caller name -> callee names (direct calls only). Endpoints not present
  /// in `records` are external symbols.
  std::map<std::string, std::set<std::string>> call_graph_edges;

  const FunctionRecord* find(const std::string& name) const;
  bool has_record(const std::string& name) const { return find(name) != nullptr; }
};

struct ExtractionConfig {
  std::vector<std::string> extensions = {".c", ".h", ".cc", ".cpp", ".cxx", ".hpp"};
  /// Case-insensitive substring that marks test functions for the prefilter.
  std::string test_substring = "test";
  int jobs = 0;  // 0 = hardware concurrency
};

struct ExtractionResult {
  Codebase codebase;
  std::vector<std::string> diagnostics;
};

/// Parses one translation unit worth of source text. Never throws on bad
/// input: unparseable constructs degrade to diagnostics.
ExtractionResult parse_source(const std::string& file_label, const std::string& content);

/// Recursively parses every file under `root` with a configured extension,
/// in sorted path order. A file that fails to read is skipped with a
/// diagnostic.
ExtractionResult parse_codebase(const std::string& root, const ExtractionConfig& config = {});

/// True when the type text contains a pointer declarator or names a
/// pointer-like typedef. Array suffixes alone do not count.
bool type_is_pointer(const std::string& type_text, const PointerAliasTable& aliases);

/// Keeps records that can plausibly participate in memory management:
/// pointer-typed signature for functions, everything for macros. Entry points
/// (main, wmain) and names containing the test substring are excluded.
/// Deterministic: output order follows (file, start line, name).
std::vector<FunctionRecord> prefilter(const Codebase& cb, const ExtractionConfig& config = {});

/// On-disk codebase index: one line-oriented document per translation unit
/// under `<out_dir>/index/`, plus `<out_dir>/codebase.json` with full records.
void write_codebase_index(const Codebase& cb, const std::string& out_dir);
std::string codebase_to_json(const Codebase& cb);
Codebase codebase_from_json(const std::string& text);

}  // namespace leakscan
