#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "leakscan/extraction.hpp"
#include "leakscan/util.hpp"

using namespace leakscan;

namespace {

const std::string kFixtures = FIXTURES_DIR "/extraction";

Codebase parse_fixture_tree() {
  ExtractionConfig config;
  config.jobs = 4;
  auto res = parse_codebase(kFixtures, config);
  return res.codebase;
}

const FunctionRecord& require(const Codebase& cb, const std::string& name) {
  const FunctionRecord* r = cb.find(name);
  REQUIRE(r != nullptr);
  return *r;
}

}  // namespace

TEST_CASE("function records carry signature, verbatim body, and span") {
  Codebase cb = parse_fixture_tree();
  const auto& f = require(cb, "buffer_new");
  CHECK(f.kind == RecordKind::Function);
  CHECK(f.return_type == "buffer_ptr");  // storage class stripped
  REQUIRE(f.params.size() == 1);
  CHECK(f.params[0].name == "len");
  CHECK(f.params[0].type == "buf_size");
  CHECK(f.span.file == "basic.c");
  CHECK(f.span.start_line == 20);
  CHECK(f.body_first_line == 21);
  CHECK(f.span.end_line == 32);
  // body is the raw source slice between the braces
  CHECK(f.body.find("ALLOC_OBJ(struct buffer)") != std::string::npos);
  CHECK(f.body.find("b->data = malloc(len);") != std::string::npos);

  const auto& two = require(cb, "checksum");
  REQUIRE(two.params.size() == 2);
  CHECK(two.params[0].name == "data");
  CHECK(two.params[0].type == "const char *");
  CHECK(two.params[1].name == "len");
  CHECK(two.params[1].type == "buf_size");
  CHECK(two.return_type == "int");

  const auto& m = require(cb, "main");
  REQUIRE(m.params.size() == 2);
  CHECK(m.params[1].name == "argv");
  CHECK(m.params[1].type == "char * *");
}

TEST_CASE("callees are collected in first-seen order, member calls skipped") {
  Codebase cb = parse_fixture_tree();
  const auto& f = require(cb, "buffer_new");
  REQUIRE(f.callees.size() == 3);
  CHECK(f.callees[0] == "ALLOC_OBJ");
  CHECK(f.callees[1] == "malloc");
  CHECK(f.callees[2] == "free");
  const auto& r = require(cb, "self_test_roundtrip");
  CHECK(r.callees == std::vector<std::string>{"buffer_new", "buffer_release"});

  auto one = parse_source("m.c", "void touch(struct obj *o) { o->drain(o); poke(o); }");
  REQUIRE(one.codebase.records.size() == 1);
  // o->drain(o) is a member access, not a named callee
  CHECK(one.codebase.records[0].callees == std::vector<std::string>{"poke"});
}

TEST_CASE("function-like macros become records, object-like defines do not") {
  Codebase cb = parse_fixture_tree();
  CHECK(cb.find("MAX_LEN") == nullptr);

  const auto& alloc_obj = require(cb, "ALLOC_OBJ");
  CHECK(alloc_obj.kind == RecordKind::Macro);
  REQUIRE(alloc_obj.params.size() == 1);
  CHECK(alloc_obj.params[0].name == "type");
  CHECK(alloc_obj.body == "((type *)calloc(1, sizeof(type)))");
  CHECK(alloc_obj.callees == std::vector<std::string>{"calloc"});

  const auto& log_msg = require(cb, "LOG_MSG");
  REQUIRE(log_msg.params.size() == 2);
  CHECK(log_msg.params[0].name == "fmt");
  CHECK(log_msg.params[1].name == "...");
  CHECK(log_msg.callees == std::vector<std::string>{"log_write"});
  CHECK(log_msg.span.start_line == 6);
  CHECK(log_msg.span.end_line == 7);  // one backslash continuation

  // a space between name and '(' makes the define object-like
  auto r = parse_source("m.h", "#define SPACED (x + 1)\n");
  CHECK(r.codebase.records.empty());
}

TEST_CASE("typedef table resolves pointer-likeness transitively") {
  Codebase cb = parse_fixture_tree();
  const auto& t = cb.alias_table;
  CHECK(t.pointer_like("buffer_ptr"));
  CHECK(t.pointer_like("buffer_handle"));  // via buffer_ptr
  CHECK_FALSE(t.pointer_like("buf_size"));
  // function-pointer typedef is named but is not a data pointer
  CHECK(t.entries.count("drain_fn") == 1);
  CHECK_FALSE(t.pointer_like("drain_fn"));
  // multi-declarator: second declarator adds a star
  CHECK_FALSE(t.pointer_like("node_t"));
  CHECK(t.pointer_like("node_ptr"));
}

TEST_CASE("typedef cycles are broken and flagged") {
  auto r = parse_source("c.h", "typedef struct A B;\ntypedef B A;\ntypedef A B2;\n");
  auto& table = r.codebase.alias_table;
  table.resolve();
  CHECK(table.entries.count("A") == 1);
  CHECK(table.entries.count("B") == 1);
  bool any_flagged = false;
  for (const auto& [name, e] : table.entries) {
    (void)name;
    any_flagged = any_flagged || e.cycle_flagged;
  }
  // struct A / typedef A are distinct namespaces in C, and conflating them
  // creates a loop; resolution must still terminate.
  CHECK(any_flagged);
  CHECK_FALSE(table.pointer_like("B2"));
}

TEST_CASE("extern-C blocks and in-body preprocessor lines are transparent") {
  Codebase cb = parse_fixture_tree();
  const auto& f = require(cb, "dup_range");
  CHECK(f.return_type == "char *");
  CHECK(f.span.file == "edge.c");
  CHECK(f.body.find("verbatim body check: this comment survives") != std::string::npos);
  CHECK(f.body.find("#ifdef PARANOID") != std::string::npos);
  CHECK(f.callees == std::vector<std::string>{"malloc", "abort"});
}

TEST_CASE("an unterminated literal yields a diagnostic but later functions parse") {
  ExtractionConfig config;
  auto res = parse_codebase(kFixtures, config);
  bool saw = false;
  for (const auto& d : res.diagnostics) saw = saw || d.find("unterminated") != std::string::npos;
  CHECK(saw);
  const auto& f = require(res.codebase, "grab_slot");
  REQUIRE(f.params.size() == 2);
  CHECK(f.params[0].name == "table");
  CHECK(f.params[0].type == "int * *");
  CHECK(f.body.find("return slot;") != std::string::npos);
}

TEST_CASE("prototypes, struct bodies, and initializer calls are not functions") {
  auto r = parse_source("p.c",
                        "int probe(int x);\n"
                        "struct vt { void (*fire)(void); };\n"
                        "int seed = rand_seed();\n"
                        "int probe(int x) { return x + seed; }\n");
  REQUIRE(r.codebase.records.size() == 1);
  CHECK(r.codebase.records[0].name == "probe");
  CHECK(r.codebase.records[0].span.start_line == 4);
}

TEST_CASE("prefilter keeps pointer-shaped functions and all macros") {
  Codebase cb = parse_fixture_tree();
  ExtractionConfig config;
  auto kept = prefilter(cb, config);
  auto names = [&] {
    std::vector<std::string> v;
    for (const auto& r : kept) v.push_back(r.name);
    return v;
  }();
  // sorted by (file, start_line, name)
  CHECK(names == std::vector<std::string>{"ALLOC_OBJ", "LOG_MSG", "buffer_new",
                                          "buffer_release", "checksum", "grab_slot",
                                          "dup_range"});
  CHECK(std::find(names.begin(), names.end(), "main") == names.end());
  CHECK(std::find(names.begin(), names.end(), "count_items") == names.end());
  CHECK(std::find(names.begin(), names.end(), "self_test_roundtrip") == names.end());
}

TEST_CASE("prefilter matches the test substring case-insensitively") {
  auto r = parse_source("t.c",
                        "char *unitTest_helper(char *p) { return p; }\n"
                        "char *keepme(char *p) { return p; }\n");
  Codebase cb = r.codebase;
  cb.records[0].span.file = cb.records[1].span.file = "t.c";
  ExtractionConfig config;
  auto kept = prefilter(cb, config);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].name == "keepme");
}

TEST_CASE("prefilter is idempotent and deterministic across runs") {
  ExtractionConfig config;
  config.jobs = 4;
  std::vector<std::string> dumps;
  for (int run = 0; run < 3; ++run) {
    auto res = parse_codebase(kFixtures, config);
    auto kept = prefilter(res.codebase, config);
    Codebase narrowed;
    narrowed.root = res.codebase.root;
    narrowed.records = kept;
    narrowed.alias_table = res.codebase.alias_table;
    auto again = prefilter(narrowed, config);
    REQUIRE(again.size() == kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) CHECK(again[i].name == kept[i].name);
    narrowed.records = again;
    dumps.push_back(codebase_to_json(narrowed));
  }
  CHECK(dumps[0] == dumps[1]);
  CHECK(dumps[1] == dumps[2]);
}

TEST_CASE("codebase survives a json round trip byte for byte") {
  Codebase cb = parse_fixture_tree();
  std::string doc = codebase_to_json(cb);
  Codebase back = codebase_from_json(doc);
  CHECK(codebase_to_json(back) == doc);
  CHECK(back.records.size() == cb.records.size());
  CHECK(back.call_graph_edges == cb.call_graph_edges);
}

TEST_CASE("malformed codebase json raises a fatal error") {
  CHECK_THROWS_AS(codebase_from_json("{ nope"), FatalError);
}

TEST_CASE("index files list records per unit and rewrite only on change") {
  Codebase cb = parse_fixture_tree();
  std::string out_dir = "extraction_index_out";
  std::filesystem::remove_all(out_dir);
  write_codebase_index(cb, out_dir);
  std::string idx = read_file(std::filesystem::path(out_dir) / "index" / "basic.c.idx");
  CHECK(idx.find("function\tbuffer_new\t20\t32\tbuffer_ptr\tbuf_size len") != std::string::npos);
  CHECK(idx.find("macro\tALLOC_OBJ") != std::string::npos);
  CHECK(idx.find("calls\tbuffer_new\tALLOC_OBJ malloc free") != std::string::npos);
  auto before = std::filesystem::last_write_time(std::filesystem::path(out_dir) / "index" /
                                                 "basic.c.idx");
  write_codebase_index(cb, out_dir);
  auto after = std::filesystem::last_write_time(std::filesystem::path(out_dir) / "index" /
                                                "basic.c.idx");
  CHECK(before == after);
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("pointer detection sees through typedef chains in signatures") {
  Codebase cb = parse_fixture_tree();
  CHECK(type_is_pointer("buffer_handle", cb.alias_table));
  CHECK(type_is_pointer("char *", cb.alias_table));
  CHECK_FALSE(type_is_pointer("buf_size", cb.alias_table));
  CHECK_FALSE(type_is_pointer("int", cb.alias_table));
}
