#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "leakscan/extraction.hpp"

namespace leakscan {

enum class MmRole { Allocator, Deallocator };

/// Where the managed pointer lives: the return value for allocators, a
/// 0-based argument position for deallocators.
struct OwnershipTarget {
  bool is_return = true;
  int arg_index = -1;

  static OwnershipTarget ret() { return {true, -1}; }
  static OwnershipTarget arg(int i) { return {false, i}; }

  bool operator==(const OwnershipTarget& o) const {
    return is_return == o.is_return && arg_index == o.arg_index;
  }
  bool operator<(const OwnershipTarget& o) const {
    if (is_return != o.is_return) return is_return && !o.is_return;
    return arg_index < o.arg_index;
  }
  std::string to_string() const;  // "return" or "argN"
};

enum class Provenance { ModelGenerated, Heuristic, Manual };

/// role/target pairing is a construction invariant: allocators own their
/// return value, deallocators an argument. make() refuses anything else.
struct FunctionSummary {
  std::string name;
  MmRole role = MmRole::Allocator;
  OwnershipTarget target = OwnershipTarget::ret();
  Provenance provenance = Provenance::ModelGenerated;
  bool validated = false;

  static FunctionSummary make(std::string name, MmRole role, OwnershipTarget target,
                              Provenance prov = Provenance::ModelGenerated);
  static std::optional<FunctionSummary> try_make(std::string name, MmRole role,
                                                 OwnershipTarget target,
                                                 Provenance prov = Provenance::ModelGenerated);

  /// Identity used for merging and round-trip comparison; provenance is
  /// in-memory metadata and deliberately not part of it.
  bool same_fact(const FunctionSummary& o) const {
    return name == o.name && role == o.role && target == o.target;
  }
};

/// In-memory image of a hints document: function name -> deduplicated
/// summaries (at most one allocator entry, at most one deallocator per
/// argument index). Merging duplicates keeps validated=true if any copy had
/// it.
struct HintsFile {
  std::map<std::string, std::vector<FunctionSummary>> hints;

  void merge(const FunctionSummary& s);
  void merge_all(const std::vector<FunctionSummary>& list);
  std::vector<FunctionSummary> flatten() const;

  bool is_allocator(const std::string& name) const;
  /// Deallocator argument indices declared for `name`, ascending.
  std::vector<int> deallocator_args(const std::string& name) const;

  bool operator==(const HintsFile& o) const;
};

/// Serialized hints document. Top-level "hints" object maps each function
/// name to its entry list; `{"hints": {}}` when empty. Entries carry
/// name/role/target and a `validated: true` marker only when set.
std::string hints_to_json(const HintsFile& h);
void write_hints(const HintsFile& h, const std::string& path);
void write_hints(const std::vector<FunctionSummary>& summaries, const std::string& path);

/// Fatal on a missing file or malformed document; the error message carries
/// the location of the first violation.
HintsFile read_hints(const std::string& path);
HintsFile hints_from_json(const std::string& text, const std::string& origin = "<memory>");

/// Direct callees of `rec` that resolve to records, first occurrence order,
/// at most `limit`.
std::vector<const FunctionRecord*> select_context_callees(const FunctionRecord& rec,
                                                          const Codebase& cb, int limit = 5);

/// Classification prompt for one function: signature, source, and a context
/// section holding each provided callee's source. Deterministic.
std::string build_classification_prompt(const FunctionRecord& rec,
                                        const std::vector<const FunctionRecord*>& callees);

/// Concatenates per-function prompts under numbered delimiters and asks for
/// one combined hints object. `batch_limit` mirrors the pipeline default of
/// 20 functions per call.
std::string build_batch_prompt(const std::vector<const FunctionRecord*>& records,
                               const Codebase& cb);

inline constexpr int kClassificationBatchSize = 20;

struct ParsedHints {
  std::vector<FunctionSummary> summaries;
  std::vector<std::string> diagnostics;
};

/// Pulls the first well-formed JSON object containing a "hints" list out of
/// free-form model output. Entries with unknown names, unknown roles, or
/// role/target pairing violations are dropped with a diagnostic; the rest
/// parse. Returns empty (no diagnostics) for a well-formed empty hints list.
ParsedHints parse_hints_response(const std::string& response,
                                 const std::set<std::string>& expected_names);

const std::string& classification_prompt_template();  // versioned asset text

}  // namespace leakscan
