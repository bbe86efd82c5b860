#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "leakscan/extraction.hpp"
#include "leakscan/llm_client.hpp"

using namespace leakscan;
using nlohmann::json;

namespace {

/// Local HTTP endpoint for exercising the client; the handler is swappable
/// per test.
struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};

  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server.Post("/v1/complete", [this, handler](const httplib::Request& req,
                                                httplib::Response& res) {
      ++hits;
      handler(req, res);
    });
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~StubServer() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/complete"; }
};

std::string chat_payload(const std::string& text) {
  json doc;
  doc["choices"] = json::array({json{{"message", json{{"role", "assistant"}, {"content", text}}}}});
  return doc.dump();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& stem) {
    path = std::filesystem::temp_directory_path() / (stem + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

ClientConfig base_config(const std::string& cache_dir) {
  ClientConfig c;
  c.model_id = "generation";
  c.cache_dir = cache_dir;
  c.api_key_env = "LEAKSCAN_TEST_ABSENT_KEY";
  c.max_retries = 2;
  c.timeout_seconds = 5.0;
  return c;
}

LlmErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const LlmError& e) {
    return e.kind;
  }
  FAIL("expected an LlmError");
  return LlmErrorKind::Permanent;
}

}  // namespace

TEST_CASE("cache keys are stable digests of model and prompt") {
  std::string k = completion_cache_key("generation", "classify this");
  CHECK(k == completion_cache_key("generation", "classify this"));
  CHECK(k.size() == 32);
  for (char c : k) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
  CHECK(k != completion_cache_key("validation", "classify this"));
  CHECK(k != completion_cache_key("generation", "classify that"));
  // the separator keeps (model, prompt) splits distinct
  CHECK(completion_cache_key("ab", "c") != completion_cache_key("a", "bc"));
}

TEST_CASE("stored exchanges replay without a network") {
  TempDir tmp("leakscan_llm_cache_");
  auto cfg = base_config(tmp.path.string());
  LlmClient client(cfg);

  CompletionExchange e;
  e.cache_key = completion_cache_key(cfg.model_id, "what is f?");
  e.model_id = cfg.model_id;
  e.prompt = "what is f?";
  e.response = "{\"hints\": []}";
  client.cache_store(e);

  auto hit = client.cache_lookup("what is f?");
  REQUIRE(hit.has_value());
  CHECK(hit->response == "{\"hints\": []}");
  CHECK(hit->cache_key == e.cache_key);
  CHECK_FALSE(client.cache_lookup("something else").has_value());

  // replay mode serves the hit and refuses anything novel
  CHECK(client.complete("what is f?") == "{\"hints\": []}");
  CHECK(kind_of([&] { client.complete("novel prompt"); }) == LlmErrorKind::CacheMiss);

  // a different model profile does not see this entry
  auto other = cfg;
  other.model_id = "validation";
  CHECK_FALSE(LlmClient(other).cache_lookup("what is f?").has_value());
}

TEST_CASE("record mode calls the endpoint once and persists the exchange") {
  TempDir tmp("leakscan_llm_record_");
  std::string reply = "the verdict is {\"hints\": []}";
  auto cfg = base_config(tmp.path.string());
  cfg.mode = CacheMode::Record;

  {
    StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body);
      CHECK(body["model"] == "generation");
      CHECK(body["temperature"] == 0.0);
      CHECK(body["messages"][0]["content"] == "prompt-1");
      res.set_content(chat_payload(reply), "application/json");
    });
    cfg.endpoint = stub.url();
    LlmClient client(cfg);
    CHECK(client.complete("prompt-1") == reply);
    CHECK(stub.hits == 1);
  }

  // server gone; a replay client still answers from the recorded cache
  cfg.mode = CacheMode::Replay;
  cfg.endpoint = "http://127.0.0.1:1/unreachable";
  LlmClient offline(cfg);
  CHECK(offline.complete("prompt-1") == reply);
}

TEST_CASE("auto mode records on miss and replays on hit") {
  TempDir tmp("leakscan_llm_auto_");
  auto cfg = base_config(tmp.path.string());
  cfg.mode = CacheMode::Auto;
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_payload("cached answer"), "application/json");
  });
  cfg.endpoint = stub.url();
  LlmClient client(cfg);
  CHECK(client.complete("q") == "cached answer");
  CHECK(client.complete("q") == "cached answer");
  CHECK(stub.hits == 1);
}

TEST_CASE("transient failures retry, permanent ones do not") {
  TempDir tmp("leakscan_llm_retry_");
  auto cfg = base_config(tmp.path.string());
  cfg.mode = CacheMode::Record;

  SUBCASE("a 500 then a success") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
      static std::atomic<int> calls{0};
      if (calls++ < 2) {
        res.status = 500;
        return;
      }
      res.set_content(chat_payload("recovered"), "application/json");
    });
    cfg.endpoint = stub.url();
    LlmClient client(cfg);
    CHECK(client.complete("flaky") == "recovered");
    CHECK(stub.hits == 3);
  }

  SUBCASE("exhausted retries surface the transient error") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    cfg.endpoint = stub.url();
    cfg.max_retries = 1;
    LlmClient client(cfg);
    CHECK(kind_of([&] { client.complete("down"); }) == LlmErrorKind::Transient);
    CHECK(stub.hits == 2);
  }

  SUBCASE("a 400 fails immediately") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    cfg.endpoint = stub.url();
    LlmClient client(cfg);
    CHECK(kind_of([&] { client.complete("bad"); }) == LlmErrorKind::Permanent);
    CHECK(stub.hits == 1);
  }

  SUBCASE("an unrecognized payload is permanent") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"weird\": 1}", "application/json");
    });
    cfg.endpoint = stub.url();
    LlmClient client(cfg);
    CHECK(kind_of([&] { client.complete("odd"); }) == LlmErrorKind::Permanent);
  }

  SUBCASE("a plain response field works for simple stubs") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"response\": \"short form\"}", "application/json");
    });
    cfg.endpoint = stub.url();
    LlmClient client(cfg);
    CHECK(client.complete("short") == "short form");
  }
}

TEST_CASE("the api key travels as a bearer token when the variable is set") {
  TempDir tmp("leakscan_llm_auth_");
  auto cfg = base_config(tmp.path.string());
  cfg.mode = CacheMode::Record;
  cfg.api_key_env = "LEAKSCAN_TEST_KEY";
  ::setenv("LEAKSCAN_TEST_KEY", "test-secret-123", 1);

  std::string seen_auth = "<none>";
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    res.set_content(chat_payload("ok"), "application/json");
  });
  cfg.endpoint = stub.url();
  CHECK(LlmClient(cfg).complete("authed") == "ok");
  CHECK(seen_auth == "Bearer test-secret-123");
  ::unsetenv("LEAKSCAN_TEST_KEY");

  seen_auth = "<none>";
  auto cfg2 = cfg;
  cfg2.api_key_env = "LEAKSCAN_TEST_ABSENT_KEY";
  CHECK(LlmClient(cfg2).complete("anon") == "ok");
  CHECK(seen_auth.empty());
}

TEST_CASE("unreachable and malformed endpoints map to clear error kinds") {
  TempDir tmp("leakscan_llm_err_");
  auto cfg = base_config(tmp.path.string());
  cfg.mode = CacheMode::Record;
  cfg.max_retries = 0;

  cfg.endpoint = "http://127.0.0.1:1/nobody";
  CHECK(kind_of([&] { LlmClient(cfg).complete("x"); }) == LlmErrorKind::Transient);

  cfg.endpoint = "https://secure.example/v1";
  CHECK(kind_of([&] { LlmClient(cfg).complete("x"); }) == LlmErrorKind::Permanent);

  cfg.endpoint = "not a url";
  CHECK(kind_of([&] { LlmClient(cfg).complete("x"); }) == LlmErrorKind::Permanent);

  cfg.endpoint = "";
  CHECK(kind_of([&] { LlmClient(cfg).complete("x"); }) == LlmErrorKind::Permanent);

  LlmClient no_cache(ClientConfig{});
  CHECK(kind_of([&] { no_cache.cache_store({}); }) == LlmErrorKind::Permanent);
}

namespace {

HintsFile classify_source(const std::string& src, const HeuristicOptions& opts = {}) {
  auto res = parse_source("h.c", src);
  HintsFile h;
  h.merge_all(heuristic_classify_all(res.codebase, opts));
  return h;
}

}  // namespace

TEST_CASE("functions returning fresh allocations classify as allocators") {
  HintsFile h = classify_source(
      "char *direct(int n)\n"
      "{\n"
      "    return malloc(n);\n"
      "}\n"
      "char *guarded(int n)\n"
      "{\n"
      "    char *p = calloc(1, n);\n"
      "    if (!p)\n"
      "        return NULL;\n"
      "    return p;\n"
      "}\n"
      "char *via_alias(int n)\n"
      "{\n"
      "    char *p = malloc(n);\n"
      "    char *q = p;\n"
      "    return q;\n"
      "}\n");
  for (const char* name : {"direct", "guarded", "via_alias"}) {
    INFO(name);
    CHECK(h.is_allocator(name));
  }
  auto flat = h.flatten();
  REQUIRE(!flat.empty());
  CHECK(flat[0].provenance == Provenance::Heuristic);
}

TEST_CASE("returning borrowed or stored pointers is not allocation") {
  HintsFile h = classify_source(
      "char *identity(char *p)\n"
      "{\n"
      "    return p;\n"
      "}\n"
      "char *g_buf;\n"
      "char *global_view(void)\n"
      "{\n"
      "    return g_buf;\n"
      "}\n"
      "void alloc_unreturned(int n)\n"
      "{\n"
      "    char *p = malloc(n);\n"
      "    use(p);\n"
      "}\n");
  CHECK(h.hints.empty());
}

TEST_CASE("functions forwarding a parameter to free classify as deallocators") {
  HintsFile h = classify_source(
      "void release(char *p)\n"
      "{\n"
      "    free(p);\n"
      "}\n"
      "void release_second(int flags, char *p)\n"
      "{\n"
      "    if (p)\n"
      "        free(p);\n"
      "}\n"
      "void release_alias(char *p)\n"
      "{\n"
      "    char *q = p;\n"
      "    free(q);\n"
      "}\n"
      "struct ctx { char *buf; };\n"
      "void field_only(struct ctx *c)\n"
      "{\n"
      "    free(c->buf);\n"
      "}\n");
  CHECK(h.deallocator_args("release") == std::vector<int>{0});
  CHECK(h.deallocator_args("release_second") == std::vector<int>{1});
  CHECK(h.deallocator_args("release_alias") == std::vector<int>{0});
  // freeing a field is not freeing the argument itself
  CHECK(h.hints.count("field_only") == 0);
}

TEST_CASE("classification propagates through wrapper layers") {
  HintsFile h = classify_source(
      "char *alloc_core(int n)\n"
      "{\n"
      "    return malloc(n);\n"
      "}\n"
      "char *alloc_mid(int n)\n"
      "{\n"
      "    return alloc_core(n + 8);\n"
      "}\n"
      "char *alloc_outer(int n)\n"
      "{\n"
      "    char *p = alloc_mid(n);\n"
      "    return p;\n"
      "}\n"
      "void free_core(char *p)\n"
      "{\n"
      "    free(p);\n"
      "}\n"
      "void free_outer(char *p)\n"
      "{\n"
      "    free_core(p);\n"
      "}\n");
  CHECK(h.is_allocator("alloc_mid"));
  CHECK(h.is_allocator("alloc_outer"));
  CHECK(h.deallocator_args("free_outer") == std::vector<int>{0});
}

TEST_CASE("mutually recursive helpers terminate without a classification") {
  HintsFile h = classify_source(
      "void ping(char *p)\n"
      "{\n"
      "    pong(p);\n"
      "}\n"
      "void pong(char *p)\n"
      "{\n"
      "    ping(p);\n"
      "}\n");
  CHECK(h.hints.empty());
}

TEST_CASE("a recursive deallocator still classifies from its base case") {
  HintsFile h = classify_source(
      "void drain(struct node *n)\n"
      "{\n"
      "    if (n->next)\n"
      "        drain(n->next);\n"
      "    free(n);\n"
      "}\n");
  CHECK(h.deallocator_args("drain") == std::vector<int>{0});
}

TEST_CASE("wrapper chains deeper than the depth budget stay unknown") {
  std::string src =
      "void w1(char *p)\n"
      "{\n"
      "    free(p);\n"
      "}\n";
  for (int i = 2; i <= 12; ++i)
    src += "void w" + std::to_string(i) + "(char *p)\n{\n    w" + std::to_string(i - 1) +
           "(p);\n}\n";
  auto res = parse_source("deep.c", src);

  const FunctionRecord* w11 = res.codebase.find("w11");
  REQUIRE(w11 != nullptr);
  auto reachable = heuristic_classify(*w11, res.codebase);
  REQUIRE(reachable.size() == 1);
  CHECK(reachable[0].role == MmRole::Deallocator);

  const FunctionRecord* w12 = res.codebase.find("w12");
  REQUIRE(w12 != nullptr);
  CHECK(heuristic_classify(*w12, res.codebase).empty());
}

TEST_CASE("macros classify from their replacement text") {
  HintsFile h = classify_source(
      "#define ALLOC_OBJ(type) ((type *)calloc(1, sizeof(type)))\n"
      "#define DISPOSE(x) free(x)\n"
      "#define LOG_ERR(msg) fprintf(stderr, \"%s\\n\", msg)\n"
      "#define DROP_SECOND(tag, ptr) free(ptr)\n");
  CHECK(h.is_allocator("ALLOC_OBJ"));
  CHECK(h.deallocator_args("DISPOSE") == std::vector<int>{0});
  CHECK(h.deallocator_args("DROP_SECOND") == std::vector<int>{1});
  CHECK(h.hints.count("LOG_ERR") == 0);
}

TEST_CASE("operator new and delete count as primitives") {
  HintsFile h = classify_source(
      "struct blob *make_blob(void)\n"
      "{\n"
      "    return new blob;\n"
      "}\n"
      "void kill_blob(struct blob *b)\n"
      "{\n"
      "    delete b;\n"
      "}\n");
  CHECK(h.is_allocator("make_blob"));
  CHECK(h.deallocator_args("kill_blob") == std::vector<int>{0});
}

TEST_CASE("custom primitive lists extend classification") {
  HeuristicOptions opts;
  opts.alloc_primitives.push_back("xmalloc");
  opts.free_primitives.push_back("xfree");
  HintsFile h = classify_source(
      "char *grab(int n)\n"
      "{\n"
      "    return xmalloc(n);\n"
      "}\n"
      "void drop(char *p)\n"
      "{\n"
      "    xfree(p);\n"
      "}\n",
      opts);
  CHECK(h.is_allocator("grab"));
  CHECK(h.deallocator_args("drop") == std::vector<int>{0});
}
