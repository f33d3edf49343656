#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(PDMSIM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pdmsim-cli-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run writes every artifact and summarize reproduces the summary") {
  const auto dir = scratch("ok");
  CHECK(run("run --preset paper-latency --quiet --out " + dir.string()) == 0);
  for (auto f : {"trace.csv", "trace.jsonl", "energy_ledger.csv", "latency.csv", "summary.json",
                 "energy_model.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const std::string cmd = std::string(PDMSIM_CLI) + " summarize --json " + dir.string() + " > " +
                          (dir / "resummary.json").string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(slurp(dir / "resummary.json") == slurp(dir / "summary.json"));
}

TEST_CASE("zero-duration run succeeds with an empty trace") {
  const auto dir = scratch("zero");
  CHECK(run("run --preset paper-latency --until 0 --quiet --out " + dir.string()) == 0);
  CHECK(slurp(dir / "trace.csv") ==
        "timestamp_ms,node_id,event_kind,mode,state,H_hex,tau,sigma,q_t,latency_ms,battery_pct\n");
}

TEST_CASE("configuration errors exit with 2 and write nothing") {
  const auto dir = scratch("bad");
  std::ofstream(dir / "bad.yaml") << "seed: 1\nnot_a_key: true\n";
  const auto out = dir / "out";
  CHECK(run("run " + (dir / "bad.yaml").string() + " --out " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
  CHECK(run("run " + (dir / "missing.yaml").string() + " --out " + out.string()) == 2);
  CHECK(run("run --preset no-such-preset --out " + out.string()) == 2);
  CHECK(run("run --out " + out.string()) == 2);
  CHECK(run("run --preset paper-latency --until -5 --out " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("seed override changes the trace, same seed reproduces it") {
  const auto a = scratch("seed-a"), b = scratch("seed-b"), c = scratch("seed-c");
  CHECK(run("run --preset paper-latency --quiet --seed 3 --out " + a.string()) == 0);
  CHECK(run("run --preset paper-latency --quiet --seed 3 --out " + b.string()) == 0);
  CHECK(run("run --preset paper-latency --quiet --seed 4 --out " + c.string()) == 0);
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "trace.csv") != slurp(c / "trace.csv"));
}

TEST_CASE("summarize rejects a malformed trace") {
  const auto dir = scratch("malformed");
  std::ofstream(dir / "trace.csv")
      << "timestamp_ms,node_id,event_kind,mode,state,H_hex,tau,sigma,q_t,latency_ms,battery_pct\n"
      << "0.000,0,node-start,S,INITIAL,,,,,,100.000000\n"
      << "garbage\n";
  CHECK(run("summarize " + dir.string()) == 3);
}
