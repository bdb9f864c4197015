#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = crawlrate::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("crawlrate_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

json read_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

const std::string kExperiment = R"({
  "name": "tiny",
  "delta": 5.0, "rate_p": 3.0, "n_steps": 200, "n_runs": 4, "master_seed": 3,
  "estimators": [
    {"kind": "lln"},
    {"kind": "sa", "eta": "poly:0.75"},
    {"kind": "sam", "beta": "poly:0.75", "eta": "poly:1.3"},
    {"kind": "mle", "resolve_every": 20}
  ]
})";

const std::string kScenario = R"({
  "name": "two-group-small", "budget": 5.0, "rounds": 3, "steps_per_round": 10, "seed": 1, "oracle": true,
  "groups": [{"count": 7, "delta": 0.642857142857, "weight": 2.0}, {"count": 43, "delta": 0.011627906977}],
  "estimators": [{"kind": "sa"}]
})";

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"simulate"}).code == 2);
  CHECK(run({"simulate", "--config", "/nonexistent/config.json"}).code == 2);
  CHECK(run({"simulate", "--format", "xml"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("malformed configs exit with 2") {
  TempDir dir;
  write(dir / "bad.json", "{ not json");
  CHECK(run({"simulate", "--config", dir / "bad.json", "--out", dir / "o1"}).code == 2);
  write(dir / "missing.json", R"({"delta": 5})");
  CHECK(run({"simulate", "--config", dir / "missing.json", "--out", dir / "o2"}).code == 2);
  write(dir / "kind.json", R"({"delta": 5, "rate_p": 3, "n_steps": 10, "n_runs": 2, "estimators": [{"kind": "x"}]})");
  CHECK(run({"simulate", "--config", dir / "kind.json", "--out", dir / "o3"}).code == 2);
}

TEST_CASE("simulate writes a report with seed and rng metadata") {
  TempDir dir;
  write(dir / "exp.json", kExperiment);
  const auto r = run({"simulate", "--config", dir / "exp.json", "--out", dir / "out"});
  REQUIRE(r.code == 0);
  const json report = read_json(dir / "out/report.json");
  CHECK(report["seed"] == 3);
  CHECK(report["rng"].get<std::string>().find("mt19937_64") != std::string::npos);
  CHECK(report["estimators"].size() == 4);
  CHECK(report["estimator_configs"][2]["regime"] == "TWO_TIMESCALE");
  CHECK(fs::exists(dir / "out/curves/lln_mean.csv"));
  CHECK(fs::exists(dir / "out/curves/sam_ci_upper.csv"));

  // refusing to overwrite, then overwriting with --force
  CHECK(run({"simulate", "--config", dir / "exp.json", "--out", dir / "out"}).code == 2);
  const auto forced = run({"simulate", "--config", dir / "exp.json", "--out", dir / "out", "--force", "--seed", "9"});
  CHECK(forced.code == 0);
  CHECK(read_json(dir / "out/report.json")["seed"] == 9);

  const auto j = run({"simulate", "--config", dir / "exp.json", "--out", dir / "json", "--format", "json"});
  CHECK(j.code == 0);
  CHECK(read_json(dir / "json/report.json")["curves"]["sa"]["rmse"].size() == 200);
}

TEST_CASE("simulate with a trace config writes a trace file") {
  TempDir dir;
  write(dir / "trace.json", R"({"kind": "trace", "rate": 2.0, "horizon": 100.0, "seed": 4})");
  REQUIRE(run({"simulate", "--config", dir / "trace.json", "--out", dir / "t"}).code == 0);
  CHECK(fs::exists(dir / "t/trace.txt"));
  const auto ingest = run({"ingest", "--trace", dir / "t/trace.txt"});
  REQUIRE(ingest.code == 0);
  const json summary = json::parse(ingest.out);
  CHECK(summary["count"].get<int>() > 100);
}

TEST_CASE("ingest and qq on a small trace") {
  TempDir dir;
  write(dir / "trace.txt", "# sample\n0\n1.5\n2\n2\n4.25\n7\n");
  const auto r = run({"ingest", "--trace", dir / "trace.txt", "--time-unit", "min"});
  REQUIRE(r.code == 0);
  const json s = json::parse(r.out);
  CHECK(s["duplicates_dropped"] == 1);
  CHECK(s["count"] == 5);
  CHECK(s["change_rate"].get<double>() == doctest::Approx(4.0 / (7.0 / 60.0)));

  CHECK(run({"qq", "--trace", dir / "trace.txt", "--out", dir / "qq"}).code == 0);
  const json qq = read_json(dir / "qq/qq.json");
  CHECK(qq["rate_source"] == "empirical");
  CHECK(qq["n"] == 4);
  CHECK(fs::exists(dir / "qq/qq.csv"));

  write(dir / "bad.txt", "1\n2\nthree\n");
  const auto bad = run({"ingest", "--trace", dir / "bad.txt"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("line 3") != std::string::npos);
  CHECK(run({"ingest", "--trace", dir / "none.txt"}).code == 2);
  CHECK(run({"ingest", "--trace", dir / "trace.txt", "--time-unit", "fortnight"}).code == 2);
}

TEST_CASE("estimate on a trace") {
  TempDir dir;
  write(dir / "single.txt", "5\n");
  CHECK(run({"estimate", "--trace", dir / "single.txt", "--rate", "1", "--out", dir / "e0"}).code == 1);

  write(dir / "exp.json", R"({"kind": "trace", "rate": 1.0, "horizon": 2000.0, "seed": 2})");
  REQUIRE(run({"simulate", "--config", dir / "exp.json", "--out", dir / "t"}).code == 0);
  const auto r = run({"estimate", "--trace", dir / "t/trace.txt", "--rate", "2", "--out", dir / "e1", "--format",
                      "json", "--estimators", "lln,sa,mle"});
  REQUIRE(r.code == 0);
  const json summary = read_json(dir / "e1/summary.json");
  CHECK(summary["estimators"].size() == 3);
  CHECK(summary["estimators"][2]["solver"]["status"] == "CONVERGED");
  CHECK(summary["estimators"][0]["final_estimate"].get<double>() == doctest::Approx(1.0).epsilon(0.25));
  std::ifstream lines(dir / "e1/trajectories.jsonl");
  std::string first;
  std::getline(lines, first);
  const json line = json::parse(first);
  CHECK(line.contains("k"));
  CHECK(line.contains("seed"));
  CHECK(line["estimator"] == "lln");

  const auto empty = run({"estimate", "--trace", dir / "t/trace.txt", "--rate", "2", "--estimators", ""});
  CHECK(empty.code == 0);
  CHECK(empty.err.find("empty estimator set") != std::string::npos);
  CHECK(run({"estimate", "--trace", dir / "t/trace.txt", "--out", dir / "e2"}).code == 2);
}

TEST_CASE("optimize and adaptive on a scenario") {
  TempDir dir;
  write(dir / "s.json", kScenario);
  REQUIRE(run({"optimize", "--config", dir / "s.json", "--out", dir / "opt"}).code == 0);
  const json alloc = read_json(dir / "opt/allocation.json");
  double total = 0.0;
  for (double p : alloc["rates"]) total += p;
  CHECK(total == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(alloc["round"] == 0);

  REQUIRE(run({"adaptive", "--config", dir / "s.json", "--out", dir / "ad"}).code == 0);
  const json summary = read_json(dir / "ad/summary.json");
  CHECK(summary["results"].size() == 2);
  CHECK(summary["results"][0]["final_true_objective"] == summary["results"][0]["optimal_objective"]);
  CHECK(fs::exists(dir / "ad/sa/allocations.jsonl"));
  CHECK(fs::exists(dir / "ad/sa/trajectories.csv"));
}

TEST_CASE("bundled configs parse") {
  const fs::path configs = fs::path(CRAWLRATE_SOURCE_DIR) / "configs";
  REQUIRE(fs::exists(configs));
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(configs)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    std::ifstream in(entry.path());
    const json doc = json::parse(in, nullptr, true, true);
    CHECK_MESSAGE(doc.is_object(), entry.path().string());
  }
  CHECK(count >= 7);
}

TEST_CASE("report.json is identical across identical runs") {
  TempDir dir;
  write(dir / "exp.json", kExperiment);
  REQUIRE(run({"simulate", "--config", dir / "exp.json", "--out", dir / "a", "--jobs", "1"}).code == 0);
  REQUIRE(run({"simulate", "--config", dir / "exp.json", "--out", dir / "b", "--jobs", "2"}).code == 0);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "a/report.json") == slurp(dir / "b/report.json"));
  CHECK(slurp(dir / "a/curves/sa_rmse.csv") == slurp(dir / "b/curves/sa_rmse.csv"));
  CHECK(read_json(dir / "a/timing.json")["estimators"].contains("lln"));
}

TEST_CASE("bundled scenario starts every page at the uniform rate") {
  TempDir dir;
  const std::string config = (fs::path(CRAWLRATE_SOURCE_DIR) / "configs/sec5.json").string();
  REQUIRE(run({"adaptive", "--config", config, "--out", dir / "ad"}).code == 0);
  std::ifstream lines(dir / "ad/sa/allocations.jsonl");
  std::string first;
  std::getline(lines, first);
  const json round0 = json::parse(first);
  CHECK(round0["round"] == 0);
  REQUIRE(round0["rates"].size() == 50);
  for (double p : round0["rates"]) CHECK(p == doctest::Approx(0.1));
}

TEST_CASE("single-page scenario puts the whole budget on the page") {
  TempDir dir;
  write(dir / "one.json", R"({"name": "one", "budget": 2.5, "rounds": 2, "steps_per_round": 5, "seed": 1,
    "groups": [{"count": 1, "delta": 0.4}], "estimators": [{"kind": "lln"}]})");
  REQUIRE(run({"optimize", "--config", dir / "one.json", "--out", dir / "o"}).code == 0);
  CHECK(read_json(dir / "o/allocation.json")["rates"][0].get<double>() == doctest::Approx(2.5));
}

TEST_CASE("bundled large-delta experiment runs end to end") {
  TempDir dir;
  const std::string config = (fs::path(CRAWLRATE_SOURCE_DIR) / "configs/fig3.json").string();
  REQUIRE(run({"simulate", "--config", config, "--out", dir / "f3"}).code == 0);
  const json report = read_json(dir / "f3/report.json");
  CHECK(report["n_runs"] == 100);
  CHECK(report["estimators"].size() == 3);
}
