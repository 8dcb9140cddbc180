#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cavopt/simulation.hpp"

using namespace cavopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cavsim_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int cavsim(const std::string& args) {
  const std::string cmd = std::string(CAVSIM_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kMinimal = R"({"schema_version": 1, "arrivals": [{"id": 1, "t0": 0, "v0": 10}]})";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  while (std::getline(ss, line)) out.push_back(split(line));
  return out;
}

}  // namespace

TEST_CASE("minimal scenario parses with defaults") {
  const Scenario s = parse_scenario(kMinimal);
  CHECK(s.schema_version == 1);
  REQUIRE(s.variants.size() == 1);
  CHECK(s.variants[0].name == "main");
  CHECK(s.config.L == 370.0);
  CHECK(s.run.sample_step == 0.05);
  CHECK(s.variants[0].arrivals[0].road == "NS");
}

TEST_CASE("parser is strict") {
  const char* bad[] = {
      R"({"arrivals": [{"id": 1, "t0": 0, "v0": 10}]})",
      R"({"schema_version": 2, "arrivals": [{"id": 1, "t0": 0, "v0": 10}]})",
      R"({"schema_version": 1, "extra": 1, "arrivals": [{"id": 1, "t0": 0, "v0": 10}]})",
      R"({"schema_version": 1, "config": {"Lx": 3}, "arrivals": [{"id": 1, "t0": 0, "v0": 10}]})",
      R"({"schema_version": 1, "arrivals": [{"id": 1, "t0": 0, "v0": 10, "colour": "red"}]})",
      R"({"schema_version": 1, "arrivals": [{"id": 1, "t0": "0", "v0": 10}]})",
      R"({"schema_version": 1, "arrivals": [{"id": 1, "v0": 10}]})",
      R"({"schema_version": 1, "arrivals": [{"id": 1, "t0": 0, "v0": 10}, {"id": 1, "t0": 1, "v0": 10}]})",
      R"({"schema_version": 1, "arrivals": [{"id": 1, "t0": 0, "v0": 25}]})",
      R"({"schema_version": 1, "arrivals": [{"id": 1, "t0": 0, "v0": 10, "road": "XY"}]})",
      R"({"schema_version": 1, "run": {"step": 1}, "arrivals": [{"id": 1, "t0": 0, "v0": 10}]})",
      R"({"schema_version": 1, "run": {"sample_step": 0}, "arrivals": [{"id": 1, "t0": 0, "v0": 10}]})",
      R"({"schema_version": 1, "config": {"S": 500}, "arrivals": [{"id": 1, "t0": 0, "v0": 10}]})",
      R"({"schema_version": 1})",
      R"({"schema_version": 1, "arrivals": [], "variants": []})",
      R"({"schema_version": 1, "variants": [{"name": "a b", "arrivals": []}]})",
      R"({"schema_version": 1, "config": {"conflict": {"approaches": ["NS"]}}, "arrivals": []})",
      R"({"schema_version": 1, "arrivals": [)",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_scenario(text), ConfigError);
  }
}

TEST_CASE("errors name the offending key") {
  try {
    parse_scenario(R"({"schema_version": 1, "arrivals": [{"id": 1, "t0": 0, "v0": 10, "vv": 1}]})");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("arrivals[0]") != std::string::npos);
    CHECK(std::string(e.what()).find("vv") != std::string::npos);
  }
}

TEST_CASE("arrivals are sorted on load and custom conflict matrices are read") {
  const Scenario s = parse_scenario(R"({
    "schema_version": 1,
    "config": {"conflict": {"approaches": ["A/x", "B/y"], "conflicting": [["A/x", "B/y"]]}},
    "arrivals": [{"id": 2, "t0": 3, "v0": 10, "road": "B", "movement": "y"},
                 {"id": 1, "t0": 1, "v0": 10, "road": "A", "movement": "x"}]})");
  CHECK(s.variants[0].arrivals[0].id == 1);
  CHECK(s.config.conflict.conflicts({"A", "x"}, {"B", "y"}));
}

TEST_CASE("fixtures round-trip through JSON") {
  for (const auto& name : fixture_names()) {
    CAPTURE(name);
    const Scenario s = fixture(name);
    const Scenario back = parse_scenario(to_json(s));
    CHECK(to_json(back) == to_json(s));
  }
  CHECK_THROWS_AS(fixture("nope"), ConfigError);
}

TEST_CASE("fixture results") {
  for (const auto& name : fixture_names()) {
    CAPTURE(name);
    const auto start = std::chrono::steady_clock::now();
    const auto r = simulate(fixture(name));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(secs < 1.0);
    CHECK(r.exit_code() == 0);
  }

  const auto fig2 = rows(summary_csv(simulate(fixture("fig2_unconstrained"))));
  REQUIRE(fig2.size() == 2);
  CHECK(std::stod(fig2[0][5]) == doctest::Approx(32.03).epsilon(0.05 / 32.03));
  CHECK(fig2[1][0] == "fixed");
  CHECK(std::stod(fig2[1][5]) == doctest::Approx(33.0));

  const auto fig6 = simulate(fixture("fig6_lateral"));
  const auto& v6 = fig6.variants[0].vehicles;
  const double tcf = v6[0].traj.tf();
  CHECK(tcf == doctest::Approx(32.027).epsilon(1e-4));
  CHECK(v6[1].traj.eval(tcf).p == doctest::Approx(370.0).epsilon(1e-9));

  const auto fig7 = rows(summary_csv(simulate(fixture("fig7_uvmax"))));
  REQUIRE(fig7.size() == 1);
  const auto junctions = fig7[0][12];
  const auto semi = junctions.find(';');
  REQUIRE(semi != std::string::npos);
  CHECK(std::stod(junctions.substr(0, semi)) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(std::stod(junctions.substr(semi + 1)) == doctest::Approx(31.0).epsilon(0.5 / 31.0));
}

TEST_CASE("summary is reproducible") {
  Scenario s = parse_scenario(R"({"schema_version": 1, "config": {"rng_seed": 7}, "arrivals": [
    {"id": 1, "t0": 0, "v0": 10}, {"id": 2, "t0": 2, "v0": 12, "road": "EW", "movement": "eastbound"},
    {"id": 3, "t0": 2, "v0": 11, "road": "NS", "movement": "northbound"},
    {"id": 4, "t0": 5, "v0": 9}]})");
  const auto a = summary_csv(simulate(s));
  const auto b = summary_csv(simulate(s));
  CHECK(a == b);
  CHECK(a.rfind("variant,cav_id,queue_index,t0,v0,tf,travel_time,energy,cost,", 0) == 0);
}

TEST_CASE("trajectory table covers every junction and the exit") {
  const auto r = simulate(fixture("fig7_uvmax"));
  const std::string csv = trajectories_csv(r.variants[0], 0.05);
  CHECK(csv.rfind("t,p,v,u,arc_kind,cav_id\n", 0) == 0);
  const auto table = rows(csv);
  const auto& tr = r.variants[0].vehicles[0].traj;
  for (double t : tr.breakpoints()) {
    bool found = false;
    for (const auto& row : table) found |= std::abs(std::stod(row[0]) - t) < 1e-6;
    CHECK(found);
  }
  CHECK(std::abs(std::stod(table.back()[0]) - tr.tf()) <= 1e-6);
  CHECK(std::stod(table.back()[1]) == doctest::Approx(400.0).epsilon(1e-9));
  CHECK(table.back()[4] == "cruise");
}

TEST_CASE("command-line exit codes and outputs") {
  const fs::path dir = scratch("cli");
  CHECK(cavsim("run --fixture fig3_safety_no_exit --out " + (dir / "ok").string()) == 0);
  for (const char* f : {"summary.csv", "audit.txt", "trajectories.csv"})
    CHECK(fs::exists(dir / "ok" / f));
  CHECK(cavsim("run --fixture fig2_unconstrained --out " + (dir / "two").string()) == 0);
  CHECK(fs::exists(dir / "two" / "trajectories_fixed.csv"));

  std::ofstream(dir / "bad.json") << R"({"schema_version": 1, "arrivals": [{"id": 1}]})";
  CHECK(cavsim("run " + (dir / "bad.json").string() + " --out " + (dir / "x").string()) == 1);
  CHECK(cavsim("run " + (dir / "missing.json").string()) == 1);
  CHECK(cavsim("run --fixture nope") == 1);
  CHECK(cavsim("run --bogus-flag") == 1);

  // The follower enters too close behind a slow leader.
  std::ofstream(dir / "infeasible.json") << R"({"schema_version": 1, "config": {"v_max": 12.5},
    "arrivals": [{"id": 1, "t0": 0, "v0": 10, "tf_fixed": 45}, {"id": 2, "t0": 1, "v0": 12}]})";
  CHECK(cavsim("run " + (dir / "infeasible.json").string() + " --out " + (dir / "inf").string()) == 2);
  const std::string audit = read(dir / "inf" / "audit.txt");
  CHECK(audit.find("infeasible:") != std::string::npos);
  CHECK(read(dir / "inf" / "summary.csv").find("infeasible") != std::string::npos);

  std::ofstream(dir / "ok.json") << kMinimal;
  const auto run1 = dir / "r1", run2 = dir / "r2";
  CHECK(cavsim("run " + (dir / "ok.json").string() + " --seed 3 --out " + run1.string()) == 0);
  CHECK(cavsim("run " + (dir / "ok.json").string() + " --seed 3 --out " + run2.string()) == 0);
  CHECK(read(run1 / "summary.csv") == read(run2 / "summary.csv"));
  CHECK(cavsim("run " + (dir / "ok.json").string() + " --gamma 0.5 --out " + (dir / "g").string()) == 0);
  CHECK(read(dir / "g" / "summary.csv") != read(run1 / "summary.csv"));
  fs::remove_all(dir);
}
