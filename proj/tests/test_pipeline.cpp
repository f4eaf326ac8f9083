#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "nwd/io.hpp"
#include "nwd/pipeline.hpp"
#include "support.hpp"

using namespace nwd;
using testing::slurp;
using testing::TempDir;
using testing::write_text;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = NWDETECT_CONFIGS;

PipelineConfig canonical_config(const fs::path& out_dir) {
  PipelineConfig cfg = read_pipeline_config(kConfigs / "canonical.txt");
  cfg.out_dir = out_dir;
  return cfg;
}

PipelineConfig parse(const std::string& text, const fs::path& base = ".") {
  std::istringstream in(text);
  return parse_pipeline_config(in, base);
}

int run_cli(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" NWDETECT_BIN "' " + args + " >out.txt 2>err.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double iou(const DetectionEvent& a, std::size_t start, std::size_t length) {
  const std::size_t lo = std::max(a.start, start);
  const std::size_t hi = std::min(a.start + a.length, start + length);
  const double inter = hi > lo ? static_cast<double>(hi - lo) : 0.0;
  return inter / static_cast<double>(a.length + length - static_cast<std::size_t>(inter));
}

} // namespace

TEST_CASE("canonical pipeline recovers every injected docking") {
  TempDir dir;
  const auto cfg = canonical_config(dir.path);
  run_pipeline(cfg);
  const auto events = read_events_csv(dir / "events.csv", 1.0);

  const ArrayScenario sc = read_scenario_file(kConfigs / "canonical_scenario.txt");
  std::vector<const EventSpec*> truth;
  for (const auto& e : sc.wires[0].events)
    if (e.kind == EventKind::SpecificBinding) truth.push_back(&e);
  REQUIRE(events.size() == truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto start = static_cast<std::size_t>(truth[i]->onset);
    const auto length = static_cast<std::size_t>(truth[i]->duration);
    CHECK(iou(events[i], start, length) >= 0.8);
  }
}

TEST_CASE("pipeline artifacts stay inside the output directory and carry provenance") {
  TempDir dir;
  const auto cfg = canonical_config(dir / "run");
  const PipelineResult r = run_pipeline(cfg);
  const std::string header = "# " + provenance_line(cfg.canonical, cfg.seed) + "\n";
  CHECK(r.files.size() >= 10);
  for (const auto& f : r.files) {
    CHECK(f.parent_path() == dir / "run");
    CHECK(slurp(f).rfind(header, 0) == 0);
  }
  std::size_t on_disk = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir.path)) on_disk += entry.is_regular_file();
  std::vector<fs::path> unique(r.files);
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  CHECK(on_disk == unique.size());
}

TEST_CASE("hsmm figure bundle lists its series in plot order") {
  TempDir dir;
  run_pipeline(canonical_config(dir.path));
  std::istringstream in(slurp(dir / "hsmm_figure.dat"));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "index,discretized,predicted,conditioned,training,boxcar");
}

TEST_CASE("same seed, same bytes") {
  TempDir dir;
  const PipelineResult a = run_pipeline(canonical_config(dir / "a"));
  const PipelineResult b = run_pipeline(canonical_config(dir / "b"));
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    CHECK(a.files[i].filename() == b.files[i].filename());
    CHECK(slurp(a.files[i]) == slurp(b.files[i]));
  }
}

TEST_CASE("a different seed changes the simulated input") {
  TempDir dir;
  auto cfg = canonical_config(dir / "a");
  run_pipeline(cfg);
  cfg.seed = *cfg.seed + 1;
  cfg.out_dir = dir / "b";
  run_pipeline(cfg);
  CHECK(read_trace_csv(dir / "a" / "input.csv").samples != read_trace_csv(dir / "b" / "input.csv").samples);
}

TEST_CASE("empty stage list passes the input through") {
  TempDir dir;
  Trace t = testing::make_trace(testing::gaussian(64, 1.0, 3), 0.5);
  t.t0 = 10.0;
  write_trace_csv(dir / "in.csv", t, "");
  PipelineConfig cfg = parse("input in.csv\n", dir.path);
  cfg.out_dir = dir / "out";
  run_pipeline(cfg);
  const Trace back = read_trace_csv(dir / "out" / "output.csv");
  CHECK(back.samples == t.samples);
  CHECK(back.dt == t.dt);
  CHECK(back.t0 == t.t0);
}

TEST_CASE("config errors") {
  CHECK_THROWS_WITH_AS(parse("input a.csv\nstage smooth\n"), doctest::Contains("unknown stage"), InvalidInput);
  CHECK_THROWS_AS(parse("simulate s.txt\n"), InvalidInput);
  CHECK_THROWS_AS(parse("input a.csv\nstage hsmm-train\n"), InvalidInput);
  CHECK_THROWS_AS(parse("stage whiten\n"), InvalidInput);
  CHECK_THROWS_AS(parse("input a.csv\ninput b.csv\nsimulate s.txt\n"), InvalidInput);
  CHECK_THROWS_AS(parse("input a.csv\nstage detrend window\n"), InvalidInput);
  CHECK_THROWS_AS(parse("input a.csv\nfrobnicate\n"), InvalidInput);
  CHECK_NOTHROW(parse("# comment\n\ninput a.csv   # trailing\nstage whiten\n"));
}

TEST_CASE("unknown stage parameters are rejected at run time") {
  TempDir dir;
  write_trace_csv(dir / "in.csv", testing::make_trace(testing::gaussian(32, 1.0, 1)), "");
  PipelineConfig cfg = parse("input in.csv\nstage whiten colour=blue\n", dir.path);
  cfg.out_dir = dir / "out";
  CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("colour"), InvalidInput);
}

TEST_CASE("config hash is FNV-1a") {
  CHECK(config_hash("") == "cbf29ce484222325");
  CHECK(config_hash("a") == "af63dc4c8601ec8c");
  CHECK(provenance_line("", std::nullopt) == "nwdetect config=cbf29ce484222325 seed=none");
}

TEST_CASE("command line exit codes") {
  TempDir dir;
  write_trace_csv(dir / "flat.csv", testing::make_trace(std::vector<double>(16, 3.0)), "");
  write_trace_csv(dir / "noise.csv", testing::make_trace(testing::gaussian(64, 1.0, 2)), "");

  CHECK(run_cli("whiten --input noise.csv", dir.path) == 0);
  CHECK(fs::exists(dir / "whitened.csv"));
  CHECK(run_cli("whiten --input flat.csv", dir.path) == 3);
  CHECK(slurp(dir / "err.txt").rfind("error code=3 kind=numeric", 0) == 0);
  CHECK(run_cli("whiten --input missing.csv", dir.path) == 2);
  CHECK(run_cli("whiten --input noise.csv -o ../escape.csv", dir.path) == 2);
  CHECK_FALSE(fs::exists(dir.path.parent_path() / "escape.csv"));
  CHECK(run_cli("whiten --input noise.csv --bogus", dir.path) == 2);
  CHECK(run_cli("no-such-command", dir.path) == 2);
  CHECK(run_cli("hsmm-train --input noise.csv", dir.path) == 2);
}

TEST_CASE("command line pipeline matches the library") {
  TempDir dir;
  REQUIRE(run_cli("--out-dir cli pipeline --config '" + (kConfigs / "canonical.txt").string() + "'", dir.path) == 0);
  const PipelineResult lib = run_pipeline(canonical_config(dir / "lib"));
  for (const auto& f : lib.files) CHECK(slurp(f) == slurp(dir / "cli" / f.filename()));
}
