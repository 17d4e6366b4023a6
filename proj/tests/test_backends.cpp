#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <json.hpp>
#include <thread>

#include "prmkit/error.hpp"
#include "prmkit/http_backend.hpp"
#include "prmkit/judge.hpp"
#include "prmkit/mc.hpp"
#include "prmkit/parallel.hpp"
#include "prmkit/sim_world.hpp"
#include "test_util.hpp"

using namespace prmkit;
using Json = nlohmann::json;

namespace {

/// Chat-completions stand-in on an ephemeral localhost port.
class MockServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&, int call)>;

  explicit MockServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
      const int call = calls_++;
      handler_(req, res, call);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int calls() const { return calls_; }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = -1;
  std::atomic<int> calls_{0};
  std::thread thread_;
};

std::string chat_reply(const std::string& content) {
  return Json{{"choices", Json::array({Json{{"message", Json{{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

HttpBackendConfig config_for(const MockServer& server) {
  HttpBackendConfig c;
  c.endpoint = server.endpoint();
  c.model = "mock-model";
  c.timeout_s = 5.0;
  c.max_retries = 3;
  c.backoff_initial_s = 0.01;
  c.backoff_max_s = 0.05;
  return c;
}

}  // namespace

TEST_CASE("requests follow the chat-completions format") {
  std::string seen_path, seen_auth;
  Json seen_body;
  MockServer server([&](const httplib::Request& req, httplib::Response& res, int) {
    seen_path = req.path;
    seen_auth = req.get_header_value("Authorization");
    seen_body = Json::parse(req.body);
    res.set_content(chat_reply("echo: " + seen_body["messages"][0]["content"].get<std::string>()), "application/json");
  });
  auto cfg = config_for(server);
  cfg.api_key = "sk-test";
  HttpBackend backend(cfg);
  CHECK(backend.id() == "http:mock-model");
  SamplingParams p;
  p.temperature = 0.7;
  p.max_tokens = 99;
  p.seed = 42;
  p.stop = {"\n\n"};
  CHECK(backend.complete("hello", p) == "echo: hello");
  CHECK(seen_path == "/v1/chat/completions");
  CHECK(seen_auth == "Bearer sk-test");
  CHECK(seen_body["model"] == "mock-model");
  CHECK(seen_body["messages"][0]["role"] == "user");
  CHECK(seen_body["temperature"].get<double>() == doctest::Approx(0.7));
  CHECK(seen_body["max_tokens"] == 99);
  CHECK(seen_body["seed"] == 42);
  CHECK(seen_body["stop"] == Json::array({"\n\n"}));

  cfg.api_key.clear();
  CHECK(http_complete(cfg, "x", {}) == "echo: x");
  CHECK(seen_auth.empty());
  CHECK_FALSE(seen_body.contains("seed"));
  CHECK_FALSE(seen_body.contains("stop"));
}

TEST_CASE("legacy text completions are accepted") {
  MockServer server([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(R"({"choices": [{"text": "plain"}]})", "application/json");
  });
  HttpBackend backend(config_for(server));
  CHECK(backend.complete("q", {}) == "plain");
}

TEST_CASE("rate limits and server errors are retried") {
  MockServer server([](const httplib::Request&, httplib::Response& res, int call) {
    if (call < 2) {
      res.status = call == 0 ? 429 : 503;
      res.set_header("Retry-After", "0");
      res.set_content("slow down", "text/plain");
      return;
    }
    res.set_content(chat_reply("finally"), "application/json");
  });
  testutil::TempDir dir;
  auto cfg = config_for(server);
  cfg.audit_log = (dir / "audit.jsonl").string();
  HttpBackend backend(cfg);
  CHECK(backend.complete("q", {}) == "finally");
  CHECK(server.calls() == 3);

  std::vector<Json> entries;
  std::istringstream lines(testutil::read_file(dir / "audit.jsonl"));
  for (std::string line; std::getline(lines, line);) entries.push_back(Json::parse(line));
  REQUIRE(entries.size() == 3);
  CHECK(entries[0]["status"] == 429);
  CHECK(entries[1]["status"] == 503);
  CHECK(entries[2]["status"] == 200);
  CHECK(entries[0]["endpoint"] == cfg.endpoint);
  CHECK(entries[0]["request"]["messages"][0]["content"] == "q");
  CHECK(entries[0].contains("error"));
  CHECK_FALSE(entries[2].contains("error"));
}

TEST_CASE("persistent rate limiting raises RateLimited") {
  MockServer server([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 429;
    res.set_content("{}", "application/json");
  });
  auto cfg = config_for(server);
  cfg.max_retries = 2;
  HttpBackend backend(cfg);
  try {
    backend.complete("q", {});
    FAIL("expected RateLimited");
  } catch (const RateLimited& e) {
    CHECK(e.status() == 429);
    CHECK(e.endpoint() == cfg.endpoint);
  }
  CHECK(server.calls() == 3);
}

TEST_CASE("client errors fail immediately and name the endpoint") {
  MockServer server([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 401;
    res.set_content(R"({"error": "bad key"})", "application/json");
  });
  auto cfg = config_for(server);
  HttpBackend backend(cfg);
  try {
    backend.complete("q", {});
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    const std::string what = e.what();
    CHECK(what.find(cfg.endpoint) != std::string::npos);
    CHECK(what.find("401") != std::string::npos);
    CHECK(what.find("bad key") != std::string::npos);
    CHECK(e.status() == 401);
  }
  CHECK(server.calls() == 1);
}

TEST_CASE("malformed success bodies are backend errors") {
  MockServer server([](const httplib::Request&, httplib::Response& res, int call) {
    res.set_content(call == 0 ? "<html>" : R"({"choices": []})", "application/json");
  });
  HttpBackend backend(config_for(server));
  CHECK_THROWS_AS(backend.complete("q", {}), BackendError);
  CHECK_THROWS_AS(backend.complete("q", {}), BackendError);
}

TEST_CASE("timeouts and unreachable endpoints") {
  SUBCASE("read timeout") {
    MockServer server([](const httplib::Request&, httplib::Response& res, int) {
      std::this_thread::sleep_for(std::chrono::milliseconds(600));
      res.set_content(chat_reply("late"), "application/json");
    });
    auto cfg = config_for(server);
    cfg.timeout_s = 0.1;
    cfg.max_retries = 1;
    HttpBackend backend(cfg);
    const auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(backend.complete("q", {}), BackendError);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::milliseconds(2000));
    CHECK(server.calls() == 2);
  }
  SUBCASE("nothing listening") {
    std::string endpoint;
    {
      MockServer server([](const httplib::Request&, httplib::Response&, int) {});
      endpoint = server.endpoint();
    }
    HttpBackendConfig cfg;
    cfg.endpoint = endpoint;
    cfg.model = "m";
    cfg.timeout_s = 0.5;
    cfg.max_retries = 0;
    try {
      HttpBackend(cfg).complete("q", {});
      FAIL("expected BackendError");
    } catch (const BackendError& e) {
      CHECK(std::string(e.what()).find(endpoint) != std::string::npos);
      CHECK(e.endpoint() == endpoint);
      CHECK(e.status() == 0);
    }
  }
}

TEST_CASE("in-flight requests are bounded") {
  std::atomic<int> active{0}, peak{0};
  MockServer server([&](const httplib::Request&, httplib::Response& res, int) {
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    --active;
    res.set_content(chat_reply("ok"), "application/json");
  });
  auto cfg = config_for(server);
  cfg.max_in_flight = 2;
  HttpBackend backend(cfg);
  std::vector<std::string> out(8);
  parallel_for(out.size(), 8, [&](std::size_t i) { out[i] = backend.complete("q", {}); });
  for (const auto& s : out) CHECK(s == "ok");
  CHECK(peak.load() <= 2);
  CHECK(peak.load() >= 1);
}

TEST_CASE("backend configuration is validated") {
  HttpBackendConfig cfg;
  cfg.model = "m";
  cfg.endpoint = "ftp://host/v1";
  CHECK_THROWS_AS(HttpBackend{cfg}, ValidationError);
  cfg.endpoint = "localhost:8000";
  CHECK_THROWS_AS(HttpBackend{cfg}, ValidationError);
  cfg.endpoint = "http://";
  CHECK_THROWS_AS(HttpBackend{cfg}, ValidationError);
  cfg.endpoint = "http://localhost:8000/v1/";
  CHECK_NOTHROW(HttpBackend{cfg});
  cfg.model.clear();
  CHECK_THROWS_AS(HttpBackend{cfg}, ValidationError);
  cfg.model = "m";
  cfg.max_in_flight = 0;
  CHECK_THROWS_AS(HttpBackend{cfg}, ValidationError);
}

TEST_CASE("simulated backends speak the same prompt formats") {
  SimWorld world;
  world.seed = 2;
  const auto rec = sim_gold_record(world, sim_problem_id(0));
  const auto& trace = rec.annotated.trace();

  SimJudge judge(world, 1.0);
  const auto req = build_judge_prompt(rec.problem, trace.steps);
  const auto verdict = parse_judge_response(judge.complete(req.prompt_text, {}), static_cast<int>(trace.size()));
  std::vector<int> labels;
  for (const auto& e : verdict.entries) labels.push_back(e.score);
  CHECK(labels == rec.annotated.labels());
  CHECK_THROWS_AS(judge.complete("unrelated prompt", {}), BackendError);

  SimCompleter completer(world, 1.0);
  const std::span<const Step> prefix(trace.steps.data(), 1);
  SamplingParams p;
  p.seed = 9;
  const auto a = completer.complete(render_rollout_prompt(rec.problem, prefix), p);
  CHECK(a == completer.complete(render_rollout_prompt(rec.problem, prefix), p));
  CHECK(extract_final_answer(a).has_value());
  CHECK_THROWS_AS(completer.complete("unrelated prompt", p), BackendError);
  CHECK(completer.id() != judge.id());
}
