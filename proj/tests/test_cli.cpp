#include <doctest.h>

#include <httplib.h>

#include <cstdlib>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "prmkit/config.hpp"
#include "prmkit/dataset.hpp"
#include "prmkit/error.hpp"
#include "prmkit/review.hpp"
#include "prmkit/toy_prm.hpp"
#include "test_util.hpp"

using namespace prmkit;
using Json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "prmkit");
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string str(const std::filesystem::path& p) { return p.string(); }

/// A localhost port with nothing listening on it.
int closed_port() {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  return port;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = run({"--help"});
  CHECK(help.code == cli::kExitOk);
  CHECK(help.out.find("simulate") != std::string::npos);
  CHECK(help.out.find("mc-annotate") != std::string::npos);

  const auto none = run({});
  CHECK(none.code == cli::kExitValidation);

  const auto bad = run({"eval", "bon", "--bogus"});
  CHECK(bad.code == cli::kExitValidation);
  CHECK(bad.err.find("--bogus") != std::string::npos);
  CHECK(bad.err.find("--scorer") != std::string::npos);  // the subcommand's help follows

  CHECK(run({"annotate"}).code == cli::kExitValidation);  // --in is required
  CHECK(run({"simulate", "--backend", "carrier-pigeon"}).code == cli::kExitValidation);
}

TEST_CASE("missing and malformed inputs exit 1 with a message") {
  testutil::TempDir dir;
  const auto missing = run({"annotate", "--in", str(dir / "absent.jsonl")});
  CHECK(missing.code == cli::kExitValidation);
  CHECK(missing.err.find("absent.jsonl") != std::string::npos);

  testutil::write_file(dir / "bad.jsonl", "{\"problem_id\": 3}\n");
  const auto bad = run({"train-toy", "--in", str(dir / "bad.jsonl")});
  CHECK(bad.code == cli::kExitValidation);
  CHECK(bad.err.find("line 1") != std::string::npos);

  CHECK(run({"eval", "bon", "--scorer", "telepathy", "--sim-problems", "3"}).code == cli::kExitValidation);
}

TEST_CASE("simulate, annotate, train and evaluate end to end") {
  testutil::TempDir dir;
  const auto data = str(dir / "gold.jsonl");
  const auto traces = str(dir / "traces.jsonl");
  CHECK(run({"simulate", "--traces", "40", "--out", data, "--seed", "3"}).code == 0);
  CHECK(run({"simulate", "--traces", "40", "--unannotated", "--out", traces, "--seed", "3"}).code == 0);
  CHECK(read_dataset(data).size() == 40);
  CHECK(read_traces(traces).size() == 40);

  const auto annotated = str(dir / "judge.jsonl");
  const auto ann = run({"annotate", "--in", traces, "--out", annotated, "--seed", "3"});
  CHECK(ann.code == 0);
  CHECK(ann.out.find("annotated 40 traces") != std::string::npos);
  // A perfect simulated judge reproduces the gold labels.
  const auto gold = read_dataset(data);
  const auto judged = read_dataset(annotated);
  REQUIRE(judged.size() == gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) CHECK(judged[i].annotated.labels() == gold[i].annotated.labels());
  CHECK(std::filesystem::exists(annotated + ".rejects.jsonl"));

  const auto mc = run({"mc-annotate", "--in", traces, "--k", "4", "--out", str(dir / "mc.jsonl")});
  CHECK(mc.code == 0);
  CHECK(mc.out.find("mc-annotated 40 traces") != std::string::npos);

  const auto model = str(dir / "model.txt");
  CHECK(run({"train-toy", "--in", data, "--epochs", "5", "--out", model}).code == 0);
  CHECK_NOTHROW(load_model(model));

  const auto bon = run({"eval", "bon", "--sim-problems", "20", "--n", "1,4", "--scorer", "toy:" + model,
                        "--csv", str(dir / "rows.csv")});
  CHECK(bon.code == 0);
  const auto report = Json::parse(bon.out);
  CHECK(report["prm_at_n"].contains("4"));
  CHECK(testutil::read_file(dir / "rows.csv").rfind("problem_id,chosen", 0) == 0);

  const auto bins = run({"eval", "bins", "--a", annotated, "--b", str(dir / "mc.jsonl"), "--bins", "4",
                         "--permutations", "100", "--emit-plot-data", str(dir / "plot.csv")});
  CHECK(bins.code == 0);
  CHECK(Json::parse(bins.out)["bins"]["bins"].size() == 4);
  CHECK(testutil::read_file(dir / "plot.csv").find("bin_agreement,1,") != std::string::npos);

  const auto efrb = run({"eval", "ef-rb", "--data", data, "--scorer", "oracle"});
  CHECK(efrb.code == 0);
  CHECK(Json::parse(efrb.out)["ef_rb"]["ef_accuracy"] == 1.0);

  const auto stats = run({"eval", "stats", "--in", traces});
  CHECK(stats.code == 0);
  CHECK(Json::parse(stats.out)["dist_stats"]["traces"] == 40);

  const auto search = run({"eval", "step-search", "--sim-problems", "10", "--n", "4", "--scorer", "oracle"});
  CHECK(search.code == 0);
  CHECK(Json::parse(search.out)["prm_at_n_step"].contains("4"));
}

TEST_CASE("outputs are deterministic and common options work after the subcommand") {
  testutil::TempDir dir;
  const auto a = run({"simulate", "--traces", "15", "--seed", "8"});
  const auto b = run({"--seed", "8", "simulate", "--traces", "15"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK_FALSE(a.out.empty());
  CHECK(run({"simulate", "--traces", "15", "--seed", "9"}).out != a.out);

  testutil::write_file(dir / "t.jsonl", run({"simulate", "--traces", "10", "--unannotated"}).out);
  const auto m1 = run({"mc-annotate", "--in", str(dir / "t.jsonl"), "--k", "3", "--parallel", "1"});
  const auto m2 = run({"mc-annotate", "--in", str(dir / "t.jsonl"), "--k", "3", "--parallel", "6"});
  CHECK(m1.code == 0);
  CHECK(m1.out == m2.out);
}

TEST_CASE("step-level metrics on the reference fixture") {
  const auto r = run({"eval", "step-level", "--gold", str(testutil::fixture("step_level_gold.jsonl")), "--pred",
                      str(testutil::fixture("step_level_pred.jsonl"))});
  CHECK(r.code == 0);
  CHECK(r.err.find("precision 0.850 recall 0.806 F1 0.828") != std::string::npos);
  const auto m = Json::parse(r.out)["step_metrics"];
  CHECK(m["tp"] == 1000);
  CHECK(m["fp"] == 176);
  CHECK(m["fn"] == 240);
  CHECK(m["tn"] == 584);
}

TEST_CASE("segmenting raw solutions") {
  testutil::TempDir dir;
  const auto sdn = run({"segment", "--text", str(testutil::fixture("long_cot_solution.txt")), "--strategy", "sdn"});
  CHECK(sdn.code == 0);
  CHECK(Json::parse(sdn.out).size() == 27);

  Json line{{"problem_id", "x"}, {"problem", "What is 1+1?"}, {"gold_answer", "2"},
            {"solution", "One plus one is two, as we add them.\n\nWait, let me check again: 1 + 1 = 2.\n\nFinal answer: 2"}};
  testutil::write_file(dir / "raw.jsonl", line.dump() + "\n");
  const auto seg = run({"segment", "--in", str(dir / "raw.jsonl"), "--strategy", "sdn", "--out", str(dir / "t.jsonl")});
  CHECK(seg.code == 0);
  const auto traces = read_traces(dir / "t.jsonl");
  REQUIRE(traces.size() == 1);
  CHECK(traces[0].trace.size() == 3);
  CHECK(traces[0].trace.final_answer == std::optional<std::string>("2"));
}

TEST_CASE("an unreachable endpoint exits 2 and names it") {
  testutil::TempDir dir;
  const std::string endpoint = "http://127.0.0.1:" + std::to_string(closed_port()) + "/v1";
  testutil::write_file(dir / "cfg.toml", "[backend]\nendpoint = \"" + endpoint +
                                             "\"\nmodel = \"m\"\ntimeout_s = 0.5\nmax_retries = 0\n");
  testutil::write_file(dir / "t.jsonl", run({"simulate", "--traces", "2", "--unannotated"}).out);
  const auto r = run({"annotate", "--in", str(dir / "t.jsonl"), "--backend", "http", "--config", str(dir / "cfg.toml"),
                      "--out", str(dir / "o.jsonl")});
  CHECK(r.code == cli::kExitBackend);
  CHECK(r.err.find(endpoint) != std::string::npos);
}

TEST_CASE("review accuracy from a journal") {
  testutil::TempDir dir;
  ReviewJournal journal(dir / "j.jsonl");
  journal.append(ReviewRecord{"p", 0, "o1", 1, "", Verdict::Accepted, "a", "t"});
  journal.append(ReviewRecord{"p", 1, "o1", 0, "", Verdict::Rejected, "a", "t"});
  const auto r = run({"review", "accuracy", "--journal", str(dir / "j.jsonl")});
  CHECK(r.code == 0);
  const auto j = Json::parse(r.out);
  REQUIRE(j.size() == 1);
  CHECK(j[0]["annotator"] == "o1");
  CHECK(j[0]["accuracy"] == 0.5);
  CHECK(r.err.find("o1: 0.500") != std::string::npos);
}

TEST_CASE("configuration files") {
  const auto shipped = load_config(testutil::fixture("../../config/prmkit.toml"));
  CHECK(shipped.segmentation.strategy == SegmentationStrategy::Srw);
  CHECK(shipped.mc.k == 8);
  CHECK(shipped.mc.max_parallel == 8);
  CHECK(shipped.annotation_parallel == 4);
  CHECK(shipped.train.l2 == doctest::Approx(1e-4));
  CHECK(shipped.review.port == 8765);

  testutil::TempDir dir;
  testutil::write_file(dir / "words.txt", "zebra\n");
  const auto cfg = parse_config(
      "[segmentation]\nstrategy = \"sdn\"\nreflection_words_file = \"words.txt\"\n"
      "[sim]\np_err = 1\nseed = 5\n[review]\njournal = \"j.jsonl\"\n",
      dir.path());
  CHECK(cfg.segmentation.strategy == SegmentationStrategy::Sdn);
  CHECK(cfg.segmentation.reflection_words == std::vector<std::string>{"zebra"});
  CHECK(cfg.sim.p_err == 1.0);
  CHECK(cfg.sim.seed == 5);
  CHECK(cfg.review.journal == str(dir / "j.jsonl"));

  CHECK_THROWS_AS(parse_config("[nope]\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[mc]\nkay = 3\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[mc]\nk = \"eight\"\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[mc]\nk = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[mc\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[sim]\nseed = -1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[backend]\napi_key = \"sk\"\n"), ValidationError);
  CHECK_THROWS_AS(load_config(dir / "absent.toml"), ValidationError);

  ::setenv(kApiKeyEnv, "from-env", 1);
  CHECK(parse_config("").backend.api_key == "from-env");
  ::unsetenv(kApiKeyEnv);
  CHECK(parse_config("").backend.api_key.empty());
}
