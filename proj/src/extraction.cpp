#include "leakscan/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <functional>
#include <map>
#include <set>

#include <json.hpp>

#include "leakscan/lexer.hpp"
#include "leakscan/util.hpp"

namespace leakscan {

namespace fs = std::filesystem;
using nlohmann::json;

int FunctionRecord::param_index(const std::string& pname) const {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].name == pname) return static_cast<int>(i);
  return -1;
}

bool PointerAliasTable::pointer_like(const std::string& name) const {
  auto it = entries.find(name);
  return it != entries.end() && it->second.pointer_like;
}

namespace {

// depth-0 scan of an underlying-type text: '*' makes it a pointer, identifier
// tokens are candidate typedef references
struct Surface {
  bool direct_pointer = false;
  std::vector<std::string> refs;
};

Surface surface_of(const std::string& underlying) {
  Surface s;
  auto lexed = tokenize(underlying);
  int depth = 0;
  for (const auto& t : lexed.tokens) {
    if (t.kind == TokKind::Punct) {
      if (t.text == "{" || t.text == "(" || t.text == "[") ++depth;
      else if (t.text == "}" || t.text == ")" || t.text == "]") --depth;
      else if (t.text == "*" && depth == 0) s.direct_pointer = true;
    } else if (t.kind == TokKind::Identifier && depth == 0) {
      s.refs.push_back(t.text);
    }
  }
  return s;
}

}  // namespace

void PointerAliasTable::resolve() {
  std::map<std::string, int> state;  // 0/absent unvisited, 1 in progress, 2 done
  std::function<bool(const std::string&)> chase = [&](const std::string& name) -> bool {
    auto it = entries.find(name);
    if (it == entries.end()) return false;
    int& st = state[name];
    if (st == 2) return it->second.pointer_like;
    if (st == 1) {  // typedef cycle: break it, flag the entry
      it->second.cycle_flagged = true;
      return false;
    }
    st = 1;
    Surface s = surface_of(it->second.underlying);
    bool ptr = s.direct_pointer;
    if (!ptr)
      for (const auto& ref : s.refs)
        if (ref != name && chase(ref)) {
          ptr = true;
          break;
        }
    it->second.pointer_like = ptr;
    state[name] = 2;
    return ptr;
  };
  for (auto& [name, entry] : entries) {
    (void)entry;
    chase(name);
  }
}

const FunctionRecord* Codebase::find(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

bool type_is_pointer(const std::string& type_text, const PointerAliasTable& aliases) {
  auto lexed = tokenize(type_text);
  for (const auto& t : lexed.tokens) {
    if (t.kind == TokKind::Punct && t.text == "*") return true;
    if (t.kind == TokKind::Identifier && aliases.pointer_like(t.text)) return true;
  }
  return false;
}

namespace {

const std::set<std::string>& storage_keywords() {
  static const std::set<std::string> k = {"static",   "inline",   "extern",
                                          "_Noreturn", "constexpr", "__inline"};
  return k;
}

std::vector<std::string> scan_callees(const std::vector<Token>& toks, std::size_t begin,
                                      std::size_t end) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (std::size_t i = begin; i + 1 < end; ++i) {
    if (toks[i].kind != TokKind::Identifier) continue;
    if (toks[i + 1].kind != TokKind::Punct || toks[i + 1].text != "(") continue;
    if (is_non_callee_keyword(toks[i].text)) continue;
    if (i > begin && toks[i - 1].kind == TokKind::Punct &&
        (toks[i - 1].text == "." || toks[i - 1].text == "->"))
      continue;  // member access, not a direct named call
    if (seen.insert(toks[i].text).second) out.push_back(toks[i].text);
  }
  return out;
}

// params text between the signature parens, split at depth-0 commas
std::vector<Param> parse_params(const std::vector<Token>& toks, std::size_t begin,
                                std::size_t end) {
  std::vector<Param> out;
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t start = begin;
  int depth = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& t = toks[i];
    if (t.kind == TokKind::Punct) {
      if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
      else if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
      else if (t.text == "," && depth == 0) {
        groups.emplace_back(start, i);
        start = i + 1;
      }
    }
  }
  if (start < end) groups.emplace_back(start, end);
  if (groups.size() == 1) {
    auto [b, e] = groups[0];
    if (e == b) return out;  // ()
    if (e - b == 1 && toks[b].text == "void") return out;
  }
  for (auto [b, e] : groups) {
    if (e <= b) continue;
    Param p;
    if (e - b == 1 && toks[b].text == "...") {
      p.name = "...";
      p.type = "...";
      out.push_back(p);
      continue;
    }
    // declarator name: last identifier not inside an array suffix
    std::size_t name_pos = e;
    int depth2 = 0;
    for (std::size_t i = e; i > b; --i) {
      const auto& t = toks[i - 1];
      if (t.kind == TokKind::Punct) {
        if (t.text == "]" || t.text == ")") ++depth2;
        else if (t.text == "[" || t.text == "(") --depth2;
      } else if (t.kind == TokKind::Identifier && depth2 == 0) {
        name_pos = i - 1;
        break;
      }
    }
    std::string type;
    for (std::size_t i = b; i < e; ++i) {
      if (i == name_pos) continue;
      if (!type.empty()) type += ' ';
      type += toks[i].text;
    }
    if (name_pos < e) p.name = toks[name_pos].text;
    // an unnamed single-token param ("int") reads as a name; treat the lone
    // token as the type when nothing else is present
    if (type.empty() && !p.name.empty()) {
      type = p.name;
      p.name.clear();
    }
    p.type = type;
    out.push_back(p);
  }
  return out;
}

struct UnitParser {
  const std::string& file;
  const std::string& src;
  ExtractionResult result;
  std::vector<Token> toks;

  UnitParser(const std::string& f, const std::string& s) : file(f), src(s) {}

  void diag(int line, const std::string& msg) {
    result.diagnostics.push_back(file + ":" + std::to_string(line) + ": " + msg);
  }

  void parse_define(const Token& directive) {
    const std::string& text = directive.text;
    auto lexed = tokenize(text.substr(1));  // skip '#'
    const auto& dt = lexed.tokens;
    if (dt.empty() || dt[0].text != "define") return;
    if (dt.size() < 2 || dt[1].kind != TokKind::Identifier) return;
    const std::string name = dt[1].text;
    // function-like iff '(' touches the name in the raw text
    std::size_t name_end = 1 + dt[1].offset + dt[1].text.size();
    if (name_end >= text.size() || text[name_end] != '(') return;
    std::size_t i = 3;  // dt[2] is '('
    std::vector<Param> params;
    int depth = 1;
    for (; i < dt.size() && depth > 0; ++i) {
      if (dt[i].kind == TokKind::Punct) {
        if (dt[i].text == "(") ++depth;
        else if (dt[i].text == ")") {
          --depth;
          continue;
        }
      }
      if (depth == 1 && dt[i].kind == TokKind::Identifier) params.push_back({dt[i].text, ""});
      if (depth == 1 && dt[i].text == "...") params.push_back({"...", "..."});
    }
    if (depth != 0) {
      diag(directive.line, "unbalanced parens in macro definition " + name);
      return;
    }
    std::size_t body_begin = i < dt.size() ? 1 + dt[i].offset : text.size();
    FunctionRecord rec;
    rec.name = name;
    rec.kind = RecordKind::Macro;
    rec.params = std::move(params);
    rec.body = trim(text.substr(std::min(body_begin, text.size())));
    rec.body_first_line = directive.line;
    rec.span = {file, directive.line,
                directive.line + static_cast<int>(std::count(text.begin(), text.end(), '\n'))};
    auto body_lex = tokenize(rec.body);
    rec.callees = scan_callees(body_lex.tokens, 0, body_lex.tokens.size());
    result.codebase.records.push_back(std::move(rec));
  }

  // i at 'typedef'; returns index past ';'
  std::size_t parse_typedef(std::size_t i) {
    std::size_t begin = i + 1;
    int depth = 0;
    std::size_t end = begin;
    while (end < toks.size()) {
      const auto& t = toks[end];
      if (t.kind == TokKind::Punct) {
        if (t.text == "{" || t.text == "(" || t.text == "[") ++depth;
        else if (t.text == "}" || t.text == ")" || t.text == "]") --depth;
        else if (t.text == ";" && depth == 0) break;
      }
      ++end;
    }
    if (end >= toks.size()) {
      diag(toks[i].line, "typedef without terminating semicolon");
      return end;
    }
    // declarator split at depth-0 commas after the last depth-0 '}'
    std::size_t base_start = begin;
    depth = 0;
    std::size_t after_brace = begin;
    for (std::size_t k = begin; k < end; ++k) {
      const auto& t = toks[k];
      if (t.kind != TokKind::Punct) continue;
      if (t.text == "{" || t.text == "(" || t.text == "[") ++depth;
      else if (t.text == "}" || t.text == ")" || t.text == "]") {
        --depth;
        if (depth == 0 && t.text == "}") after_brace = k + 1;
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> segs;
    std::size_t seg_start = begin;
    depth = 0;
    for (std::size_t k = std::max(begin, after_brace); k < end; ++k) {
      const auto& t = toks[k];
      if (t.kind != TokKind::Punct) continue;
      if (t.text == "{" || t.text == "(" || t.text == "[") ++depth;
      else if (t.text == "}" || t.text == ")" || t.text == "]") --depth;
      else if (t.text == "," && depth == 0) {
        segs.emplace_back(seg_start, k);
        seg_start = k + 1;
      }
    }
    segs.emplace_back(seg_start, end);

    auto add_entry = [&](const std::string& name, std::size_t ub, std::size_t ue,
                         int extra_stars) {
      if (name.empty()) return;
      std::string underlying;
      for (std::size_t k = ub; k < ue; ++k) {
        if (!underlying.empty()) underlying += ' ';
        underlying += toks[k].text;
      }
      for (int s = 0; s < extra_stars; ++s) underlying += " *";
      if (!result.codebase.alias_table.entries.count(name))
        result.codebase.alias_table.entries[name] = {underlying, false, false};
    };

    // first segment carries the base type; name is `(*N)` if present, else the
    // last depth-0 identifier
    auto [fb, fe] = segs[0];
    std::size_t name_pos = fe;
    for (std::size_t k = fb; k + 2 < fe; ++k) {
      if (toks[k].text == "(" && toks[k + 1].text == "*" &&
          toks[k + 2].kind == TokKind::Identifier && k + 3 < fe && toks[k + 3].text == ")") {
        name_pos = k + 2;
        break;
      }
    }
    if (name_pos == fe) {
      int depth3 = 0;
      for (std::size_t k = fe; k > fb; --k) {
        const auto& t = toks[k - 1];
        if (t.kind == TokKind::Punct) {
          if (t.text == "}" || t.text == ")" || t.text == "]") ++depth3;
          else if (t.text == "{" || t.text == "(" || t.text == "[") --depth3;
        } else if (t.kind == TokKind::Identifier && depth3 == 0) {
          name_pos = k - 1;
          break;
        }
      }
    }
    if (name_pos < fe) {
      std::string name = toks[name_pos].text;
      std::string underlying;
      for (std::size_t k = fb; k < fe; ++k) {
        if (k == name_pos) continue;
        if (!underlying.empty()) underlying += ' ';
        underlying += toks[k].text;
      }
      if (!result.codebase.alias_table.entries.count(name))
        result.codebase.alias_table.entries[name] = {underlying, false, false};
      // further declarators reuse the base type up to the first segment's
      // declarator
      for (std::size_t s = 1; s < segs.size(); ++s) {
        auto [sb, se] = segs[s];
        int stars = 0;
        std::string dname;
        for (std::size_t k = sb; k < se; ++k) {
          if (toks[k].text == "*") ++stars;
          else if (toks[k].kind == TokKind::Identifier) dname = toks[k].text;
        }
        add_entry(dname, base_start, std::min(name_pos, fe), stars);
      }
    }
    return end + 1;
  }

  void run() {
    auto lexed = tokenize(src);
    for (auto& d : lexed.diagnostics) result.diagnostics.push_back(file + ": " + d);
    toks = std::move(lexed.tokens);

    int scope_depth = 0;
    std::vector<bool> transparent;  // per open brace
    std::size_t i = 0;
    while (i < toks.size()) {
      const Token& t = toks[i];
      if (t.kind == TokKind::Directive) {
        if (t.text.rfind("#", 0) == 0) {
          std::string after = trim(t.text.substr(1));
          if (after.rfind("define", 0) == 0) parse_define(t);
        }
        ++i;
        continue;
      }
      if (t.kind == TokKind::Punct && t.text == "{") {
        bool trans = false;
        // extern "C" { ... } and namespace N { ... } do not start a new scope
        if (i >= 1 && toks[i - 1].kind == TokKind::String && i >= 2 &&
            toks[i - 2].text == "extern")
          trans = true;
        if (i >= 1 && toks[i - 1].text == "namespace") trans = true;
        if (i >= 2 && toks[i - 2].text == "namespace" &&
            toks[i - 1].kind == TokKind::Identifier)
          trans = true;
        transparent.push_back(trans);
        if (!trans) ++scope_depth;
        ++i;
        continue;
      }
      if (t.kind == TokKind::Punct && t.text == "}") {
        if (!transparent.empty()) {
          if (!transparent.back() && scope_depth > 0) --scope_depth;
          transparent.pop_back();
        }
        ++i;
        continue;
      }
      if (scope_depth == 0 && t.kind == TokKind::Identifier && t.text == "typedef") {
        i = parse_typedef(i);
        continue;
      }
      if (scope_depth == 0 && t.kind == TokKind::Identifier && !is_non_callee_keyword(t.text) &&
          i + 1 < toks.size() && toks[i + 1].kind == TokKind::Punct && toks[i + 1].text == "(") {
        std::size_t close = match_paren(i + 1);
        if (close != npos && close + 1 < toks.size() && toks[close + 1].text == "{") {
          if (try_function(i, close)) continue;
        }
      }
      ++i;
    }
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t match_paren(std::size_t open) {
    int depth = 0;
    for (std::size_t k = open; k < toks.size(); ++k) {
      if (toks[k].kind == TokKind::Directive) continue;
      if (toks[k].kind != TokKind::Punct) continue;
      if (toks[k].text == "(") ++depth;
      else if (toks[k].text == ")") {
        if (--depth == 0) return k;
      }
    }
    return npos;
  }

  std::size_t match_brace(std::size_t open) {
    int depth = 0;
    for (std::size_t k = open; k < toks.size(); ++k) {
      if (toks[k].kind == TokKind::Directive) continue;
      if (toks[k].kind != TokKind::Punct) continue;
      if (toks[k].text == "{") ++depth;
      else if (toks[k].text == "}") {
        if (--depth == 0) return k;
      }
    }
    return npos;
  }

  // name at `name_pos`, its '(' matched by `close`, '{' at close+1.
  // Advances i past the body on success.
  bool try_function(std::size_t& name_pos, std::size_t close) {
    // return type: walk back to the previous boundary
    std::size_t rt_begin = name_pos;
    while (rt_begin > 0) {
      const Token& p = toks[rt_begin - 1];
      if (p.kind == TokKind::Directive) break;
      if (p.kind == TokKind::Punct && p.text != "*" && p.text != "&") break;
      if (p.kind == TokKind::String || p.kind == TokKind::CharLit ||
          p.kind == TokKind::Number)
        break;
      --rt_begin;
    }
    std::vector<std::string> rt_tokens;
    for (std::size_t k = rt_begin; k < name_pos; ++k) rt_tokens.push_back(toks[k].text);
    while (!rt_tokens.empty() && storage_keywords().count(rt_tokens.front()))
      rt_tokens.erase(rt_tokens.begin());
    if (rt_tokens.empty()) return false;  // no return type: not a definition
    std::string return_type;
    for (const auto& s : rt_tokens) {
      if (!return_type.empty()) return_type += ' ';
      return_type += s;
    }

    std::size_t body_open = close + 1;
    std::size_t body_close = match_brace(body_open);
    if (body_close == npos) {
      diag(toks[name_pos].line, "unbalanced braces after " + toks[name_pos].text +
                                    "(); definition skipped");
      name_pos = toks.size();
      return true;
    }

    FunctionRecord rec;
    rec.name = toks[name_pos].text;
    rec.kind = RecordKind::Function;
    rec.return_type = return_type;
    rec.params = parse_params(toks, name_pos + 2, close);
    std::size_t body_begin_off = toks[body_open].offset + 1;
    std::size_t body_end_off = toks[body_close].offset;
    rec.body = src.substr(body_begin_off, body_end_off - body_begin_off);
    rec.body_first_line = toks[body_open].line;
    rec.callees = scan_callees(toks, body_open + 1, body_close);
    rec.span = {file, toks[rt_begin].line, toks[body_close].line};
    result.codebase.records.push_back(std::move(rec));
    name_pos = body_close + 1;
    return true;
  }
};

}  // namespace

ExtractionResult parse_source(const std::string& file_label, const std::string& content) {
  UnitParser up(file_label, content);
  up.run();
  for (const auto& r : up.result.codebase.records) {
    auto& edges = up.result.codebase.call_graph_edges[r.name];
    for (const auto& c : r.callees) edges.insert(c);
  }
  return std::move(up.result);
}

ExtractionResult parse_codebase(const std::string& root, const ExtractionConfig& config) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (fs::recursive_directory_iterator it(root, ec), end; it != end && !ec;
       it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    std::string ext = it->path().extension().string();
    if (std::find(config.extensions.begin(), config.extensions.end(), ext) !=
        config.extensions.end())
      files.push_back(it->path());
  }
  if (ec) throw FatalError("cannot walk " + root + ": " + ec.message());
  std::sort(files.begin(), files.end());

  std::vector<ExtractionResult> partial(files.size());
  parallel_for_index(files.size(), config.jobs, [&](std::size_t i) {
    std::string label = fs::relative(files[i], root).generic_string();
    auto content = read_file_if_exists(files[i]);
    if (!content) {
      partial[i].diagnostics.push_back(label + ": unreadable, skipped");
      return;
    }
    partial[i] = parse_source(label, *content);
  });

  ExtractionResult merged;
  merged.codebase.root = root;
  for (auto& part : partial) {
    for (auto& r : part.codebase.records) merged.codebase.records.push_back(std::move(r));
    for (auto& [name, entry] : part.codebase.alias_table.entries)
      merged.codebase.alias_table.entries.emplace(name, entry);
    for (auto& d : part.diagnostics) merged.diagnostics.push_back(std::move(d));
  }
  merged.codebase.alias_table.resolve();
  for (const auto& r : merged.codebase.records) {
    auto& edges = merged.codebase.call_graph_edges[r.name];
    for (const auto& c : r.callees) edges.insert(c);
  }
  return merged;
}

std::vector<FunctionRecord> prefilter(const Codebase& cb, const ExtractionConfig& config) {
  std::vector<FunctionRecord> out;
  for (const auto& r : cb.records) {
    if (r.kind == RecordKind::Macro) {
      out.push_back(r);  // macros may expand to pointer operations; always kept
      continue;
    }
    if (r.name == "main" || r.name == "wmain") continue;
    if (!config.test_substring.empty() && contains_ci(r.name, config.test_substring)) continue;
    bool pointer_typed = type_is_pointer(r.return_type, cb.alias_table);
    for (const auto& p : r.params) {
      if (pointer_typed) break;
      pointer_typed = type_is_pointer(p.type, cb.alias_table);
    }
    if (pointer_typed) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const FunctionRecord& a, const FunctionRecord& b) {
    if (a.span.file != b.span.file) return a.span.file < b.span.file;
    if (a.span.start_line != b.span.start_line) return a.span.start_line < b.span.start_line;
    return a.name < b.name;
  });
  return out;
}

namespace {

json record_to_json(const FunctionRecord& r) {
  json j;
  j["name"] = r.name;
  j["kind"] = r.kind == RecordKind::Macro ? "macro" : "function";
  j["return_type"] = r.return_type;
  json params = json::array();
  for (const auto& p : r.params) params.push_back({{"name", p.name}, {"type", p.type}});
  j["params"] = params;
  j["body"] = r.body;
  j["body_first_line"] = r.body_first_line;
  j["callees"] = r.callees;
  j["file"] = r.span.file;
  j["start_line"] = r.span.start_line;
  j["end_line"] = r.span.end_line;
  return j;
}

FunctionRecord record_from_json(const json& j) {
  FunctionRecord r;
  r.name = j.at("name").get<std::string>();
  r.kind = j.at("kind").get<std::string>() == "macro" ? RecordKind::Macro : RecordKind::Function;
  r.return_type = j.at("return_type").get<std::string>();
  for (const auto& p : j.at("params"))
    r.params.push_back({p.at("name").get<std::string>(), p.at("type").get<std::string>()});
  r.body = j.at("body").get<std::string>();
  r.body_first_line = j.at("body_first_line").get<int>();
  r.callees = j.at("callees").get<std::vector<std::string>>();
  r.span = {j.at("file").get<std::string>(), j.at("start_line").get<int>(),
            j.at("end_line").get<int>()};
  return r;
}

}  // namespace

std::string codebase_to_json(const Codebase& cb) {
  json j;
  j["version"] = 1;
  j["root"] = cb.root;
  json records = json::array();
  for (const auto& r : cb.records) records.push_back(record_to_json(r));
  j["records"] = records;
  json aliases = json::object();
  for (const auto& [name, e] : cb.alias_table.entries)
    aliases[name] = {{"underlying", e.underlying},
                     {"pointer_like", e.pointer_like},
                     {"cycle_flagged", e.cycle_flagged}};
  j["aliases"] = aliases;
  json edges = json::object();
  for (const auto& [caller, callees] : cb.call_graph_edges)
    edges[caller] = std::vector<std::string>(callees.begin(), callees.end());
  j["call_edges"] = edges;
  return j.dump(2) + "\n";
}

Codebase codebase_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FatalError(std::string("malformed codebase document: ") + e.what());
  }
  Codebase cb;
  cb.root = j.value("root", "");
  for (const auto& r : j.at("records")) cb.records.push_back(record_from_json(r));
  for (auto it = j.at("aliases").begin(); it != j.at("aliases").end(); ++it) {
    const auto& e = it.value();
    cb.alias_table.entries[it.key()] = {e.at("underlying").get<std::string>(),
                                        e.at("pointer_like").get<bool>(),
                                        e.at("cycle_flagged").get<bool>()};
  }
  for (auto it = j.at("call_edges").begin(); it != j.at("call_edges").end(); ++it) {
    auto& targets = cb.call_graph_edges[it.key()];
    for (const auto& callee : it.value()) targets.insert(callee.get<std::string>());
  }
  return cb;
}

void write_codebase_index(const Codebase& cb, const std::string& out_dir) {
  fs::path index_dir = fs::path(out_dir) / "index";
  fs::create_directories(index_dir);
  write_file_if_changed(fs::path(out_dir) / "codebase.json", codebase_to_json(cb));
  std::map<std::string, std::vector<const FunctionRecord*>> by_file;
  for (const auto& r : cb.records) by_file[r.span.file].push_back(&r);
  for (auto& [file, records] : by_file) {
    std::sort(records.begin(), records.end(),
              [](const FunctionRecord* a, const FunctionRecord* b) {
                if (a->span.start_line != b->span.start_line)
                  return a->span.start_line < b->span.start_line;
                return a->name < b->name;
              });
    std::string doc = "# codebase index v1\nunit\t" + file + "\n";
    for (const auto* r : records) {
      doc += r->kind == RecordKind::Macro ? "macro\t" : "function\t";
      doc += r->name + "\t" + std::to_string(r->span.start_line) + "\t" +
             std::to_string(r->span.end_line) + "\t" + r->return_type + "\t";
      for (std::size_t i = 0; i < r->params.size(); ++i) {
        if (i) doc += ",";
        doc += r->params[i].type + " " + r->params[i].name;
      }
      doc += "\n";
      if (!r->callees.empty()) {
        doc += "calls\t" + r->name + "\t";
        for (std::size_t i = 0; i < r->callees.size(); ++i) {
          if (i) doc += " ";
          doc += r->callees[i];
        }
        doc += "\n";
      }
    }
    std::string stem = file;
    for (auto& c : stem)
      if (c == '/' || c == '\\') c = '_';
    write_file_if_changed(index_dir / (stem + ".idx"), doc);
  }
}

}  // namespace leakscan
