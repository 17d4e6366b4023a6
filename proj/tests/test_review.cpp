#include <doctest.h>

#include <httplib.h>

#include <json.hpp>
#include <thread>

#include "prmkit/error.hpp"
#include "prmkit/review.hpp"
#include "prmkit/review_server.hpp"
#include "prmkit/sim_world.hpp"
#include "test_util.hpp"

using namespace prmkit;
using Json = nlohmann::json;

namespace {

ReviewService::Clock fixed_clock() {
  auto n = std::make_shared<int>(0);
  return [n] { return "2026-01-01T00:00:" + std::string((*n < 10) ? "0" : "") + std::to_string((*n)++) + "Z"; };
}

Json call(ReviewService& svc, const std::string& method, const std::string& path,
          std::map<std::string, std::string> query = {}, const std::string& body = {}, int want = 200) {
  const auto res = svc.handle(ApiRequest{method, path, std::move(query), body});
  CHECK(res.status == want);
  return Json::parse(res.body);
}

Json verdict(ReviewService& svc, const std::string& id, const std::string& v, const std::string& who, int want = 200) {
  return call(svc, "POST", "/tasks/" + id + "/verdict", {}, Json{{"verdict", v}, {"reviewer", who}}.dump(), want);
}

ReviewRecord rec(const std::string& trace, int step, const std::string& who, Verdict v, const std::string& annotator = "judge") {
  return ReviewRecord{trace, step, annotator, 1, "r", v, who, "t"};
}

}  // namespace

TEST_CASE("review records round-trip") {
  const ReviewRecord r{"p#1", 3, "o1", 0, "it \"broke\"", Verdict::Rejected, "alice", "2026-01-01T00:00:00Z"};
  CHECK(decode_review_record(encode_review_record(r)) == r);
  CHECK(parse_verdict("accepted") == Verdict::Accepted);
  CHECK(parse_verdict("maybe") == std::nullopt);
  for (auto v : {Verdict::Pending, Verdict::Accepted, Verdict::Rejected}) CHECK(parse_verdict(to_string(v)) == v);
  try {
    decode_review_record(R"({"trace_id": "p", "step_index": 0, "verdict": "nope"})", 4);
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    CHECK(e.line() == 4);
  }
  testutil::TempDir dir;
  CHECK(read_journal(dir / "none.jsonl").empty());
}

TEST_CASE("latest verdict wins and the aggregate is a majority vote") {
  const std::vector<ReviewRecord> journal = {
      rec("a", 0, "r1", Verdict::Accepted), rec("a", 0, "r1", Verdict::Rejected),  // r1 changes their mind
      rec("a", 0, "r2", Verdict::Rejected), rec("a", 1, "r1", Verdict::Accepted),
      rec("a", 1, "r2", Verdict::Rejected),                                        // tie counts as rejected
      rec("a", 2, "r1", Verdict::Accepted), rec("a", 2, "r2", Verdict::Accepted),
      rec("a", 2, "r3", Verdict::Rejected), rec("b", 0, "r1", Verdict::Pending),
      rec("b", 1, "r1", Verdict::Accepted, "mc"),
  };
  const auto latest = latest_verdicts(journal);
  REQUIRE(latest.size() == 9);
  CHECK(latest[0].verdict == Verdict::Rejected);
  CHECK(latest[0].reviewer_id == "r1");

  const auto report = accuracy_report(journal, "judge");
  CHECK(report.aggregate.accepted == 1);
  CHECK(report.aggregate.rejected == 2);
  CHECK(*report.aggregate.accuracy == doctest::Approx(1.0 / 3.0));
  REQUIRE(report.per_reviewer.size() == 3);
  CHECK(report.per_reviewer[0].reviewer == "r1");
  CHECK(report.per_reviewer[0].accepted == 2);
  CHECK(report.per_reviewer[0].rejected == 1);
  CHECK(report.per_reviewer[2].reviewer == "r3");
  CHECK(*report.per_reviewer[2].accuracy == 0.0);
  CHECK(annotation_accuracy(journal, "mc") == 1.0);
  CHECK_FALSE(annotation_accuracy(journal, "nobody").has_value());
}

TEST_CASE("review API over the case study") {
  testutil::TempDir dir;
  const auto journal = dir / "journal.jsonl";
  const std::vector<DatasetRecord> data = {testutil::case_study()};
  ReviewService svc(data, journal, fixed_clock());
  REQUIRE(svc.tasks().size() == 11);

  const auto page = call(svc, "GET", "/tasks", {{"page_size", "4"}});
  CHECK(page["total_pending"] == 11);
  REQUIRE(page["tasks"].size() == 4);
  const auto& first = page["tasks"][0];
  CHECK(first["id"] == "0.0");
  CHECK(first["trace_id"] == "case-study");
  CHECK(first["gold_answer"] == "Briana");
  CHECK(first["annotator"] == "o1");
  CHECK(first["llm_score"] == 1);
  CHECK(call(svc, "GET", "/tasks", {{"page", "3"}, {"page_size", "4"}})["tasks"].size() == 3);
  CHECK(call(svc, "GET", "/tasks", {{"page", "9"}})["tasks"].empty());

  const auto task = call(svc, "GET", "/tasks/0.4");
  CHECK(task["llm_score"] == 0);
  CHECK(task["context"].size() == 4);
  CHECK(task["rationale"] == data[0].annotated.annotations()[4].rationale);

  CHECK(call(svc, "GET", "/accuracy", {{"annotator", "o1"}})["status"] == "no data");
  CHECK(call(svc, "GET", "/accuracy", {{"annotator", "o1"}})["accuracy"].is_null());

  for (const auto& t : svc.tasks()) {
    const auto r = verdict(svc, t.id, "accepted", "alice");
    CHECK(r["reviewer"] == "alice");
    CHECK(r["verdict"] == "accepted");
  }
  const auto prog = call(svc, "GET", "/progress");
  CHECK(prog["total_tasks"] == 11);
  CHECK(prog["reviewed"] == 11);
  CHECK(prog["pending"] == 0);
  CHECK(prog["complete"] == true);
  CHECK(prog["reviewers"] == Json::array({"alice"}));
  const auto acc = call(svc, "GET", "/accuracy", {{"annotator", "o1"}});
  CHECK(acc["accuracy"] == 1.0);
  CHECK(acc["status"] == "ok");
  CHECK(acc["accepted"] == 11);
  CHECK(call(svc, "GET", "/tasks")["total_pending"] == 0);
  CHECK(call(svc, "GET", "/tasks", {{"reviewer", "bob"}})["total_pending"] == 11);
  CHECK(call(svc, "GET", "/tasks/0.2")["verdicts"]["alice"] == "accepted");

  const auto all = call(svc, "GET", "/accuracy");
  REQUIRE(all["annotators"].size() == 1);
  CHECK(all["annotators"][0]["annotator"] == "o1");
  CHECK(read_journal(journal).size() == 11);
  CHECK(read_journal(journal)[0].timestamp == "2026-01-01T00:00:00Z");
}

TEST_CASE("review API errors") {
  testutil::TempDir dir;
  ReviewService svc({testutil::case_study()}, dir / "j.jsonl", fixed_clock());
  call(svc, "GET", "/tasks/9.9", {}, {}, 404);
  call(svc, "GET", "/nowhere", {}, {}, 404);
  call(svc, "DELETE", "/tasks", {}, {}, 405);
  call(svc, "GET", "/tasks/0.0/verdict", {}, {}, 405);
  call(svc, "POST", "/progress", {}, {}, 405);
  call(svc, "GET", "/tasks", {{"page", "0"}}, {}, 400);
  call(svc, "GET", "/tasks", {{"page_size", "many"}}, {}, 400);
  call(svc, "POST", "/tasks/0.0/verdict", {}, "not json", 400);
  call(svc, "POST", "/tasks/0.0/verdict", {}, R"({"verdict": "accepted"})", 400);
  call(svc, "POST", "/tasks/0.0/verdict", {}, R"({"verdict": "accepted", "reviewer": "  "})", 400);
  verdict(svc, "0.0", "pending", "alice", 400);
  verdict(svc, "0.0", "maybe", "alice", 400);
  verdict(svc, "7.0", "accepted", "alice", 404);
  CHECK(svc.journal_snapshot().empty());
}

TEST_CASE("a failing journal leaves the state unchanged") {
  testutil::TempDir dir;
  std::filesystem::create_directories(dir / "journal_dir");
  ReviewService svc({testutil::case_study()}, dir / "journal_dir", fixed_clock());
  const auto res = svc.handle(ApiRequest{"POST", "/tasks/0.0/verdict", {}, R"({"verdict": "accepted", "reviewer": "a"})"});
  CHECK(res.status == 500);
  CHECK(Json::parse(res.body).contains("error"));
  CHECK(svc.journal_snapshot().empty());
  CHECK(call(svc, "GET", "/progress")["reviewed"] == 0);
}

TEST_CASE("restarting replays the journal") {
  testutil::TempDir dir;
  const auto journal = dir / "j.jsonl";
  SimWorld world;
  auto data = sim_dataset(world, 3);
  data.push_back(data[0]);  // a repeated problem gets its own trace id
  {
    ReviewService svc(data, journal, fixed_clock());
    const auto& tasks = svc.tasks();
    CHECK(tasks.front().trace_id == data[0].problem.id + "#0");
    CHECK(tasks.back().trace_id == data[0].problem.id + "#1");
    verdict(svc, "0.0", "accepted", "alice");
    verdict(svc, "0.0", "rejected", "alice");
    verdict(svc, "0.1", "rejected", "bob");
    verdict(svc, "3.0", "accepted", "bob");
  }
  ReviewService again(data, journal, fixed_clock());
  CHECK(again.journal_snapshot().size() == 4);
  const auto t = call(again, "GET", "/tasks/0.0");
  CHECK(t["verdicts"]["alice"] == "rejected");
  CHECK(call(again, "GET", "/tasks/3.0")["verdicts"]["bob"] == "accepted");
  const auto prog = call(again, "GET", "/progress");
  CHECK(prog["reviewed"] == 3);
  CHECK(prog["rejected"] == 2);
  const auto acc = call(again, "GET", "/accuracy", {{"annotator", "oracle"}});
  CHECK(acc["accepted"] == 1);
  CHECK(acc["rejected"] == 2);

  // Appending after replay keeps earlier lines intact.
  verdict(again, "1.0", "accepted", "carol");
  CHECK(read_journal(journal).size() == 5);
}

TEST_CASE("review server over HTTP") {
  testutil::TempDir dir;
  std::filesystem::create_directories(dir / "ui");
  testutil::write_file(dir / "ui" / "index.html", "<html>review</html>");
  ReviewService svc({testutil::case_study()}, dir / "j.jsonl", fixed_clock());
  ReviewServer server(svc, dir / "ui");
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/tasks?page_size=2");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body)["tasks"].size() == 2);
  CHECK(res->get_header_value("Content-Type").find("application/json") != std::string::npos);

  res = client.Post("/api/tasks/0.1/verdict", R"({"verdict": "rejected", "reviewer": "zoe"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  res = client.Get("/api/progress");
  REQUIRE(res);
  CHECK(Json::parse(res->body)["reviewed"] == 1);
  res = client.Get("/tasks/42.0");
  REQUIRE(res);
  CHECK(res->status == 404);
  res = client.Delete("/tasks");
  REQUIRE(res);
  CHECK(res->status == 405);
  res = client.Get("/index.html");
  REQUIRE(res);
  CHECK(res->body == "<html>review</html>");

  server.stop();
  t.join();
  CHECK(read_journal(dir / "j.jsonl").size() == 1);
  CHECK_THROWS_AS(ReviewServer(svc, dir / "missing"), ValidationError);
}
