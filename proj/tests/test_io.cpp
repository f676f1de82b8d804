#include <catch2/catch_amalgamated.hpp>

#include "nonsmooth/io.hpp"
#include "nonsmooth/models.hpp"

#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

using namespace nonsmooth;
using Catch::Approx;

namespace {

Trajectory sample_run() {
  SolverConfig cfg;
  cfg.dense_dt = 0.05;
  State x0(3);
  x0 << -0.5, 1.0, 1.2;
  return integrate_filippov(watt({1.5, 1.1}), x0, 0.0, 5.0, cfg);
}

}  // namespace

TEST_CASE("real formatting round-trips exactly") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(mant(rng), expo(rng));
    const std::string s = fmt_real(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(fmt_real(0.1) == "0.10000000000000001");
  CHECK(fmt_real(1.0) == "1");
}

TEST_CASE("trajectory csv round trip") {
  const Trajectory tr = sample_run();
  REQUIRE(tr.ok());
  REQUIRE_FALSE(tr.events.empty());

  std::ostringstream body, ev;
  write_trajectory_csv(tr, body);
  write_events_csv(tr, 3, ev);

  SECTION("schema") {
    CHECK(body.str().rfind("t,x0,x1,x2,mode\n", 0) == 0);
    CHECK(ev.str().rfind("t,kind,x0,x1,x2\n", 0) == 0);
    CHECK(body.str().find("SL") != std::string::npos);
  }

  SECTION("values survive unchanged") {
    std::istringstream in(body.str());
    Trajectory back = read_trajectory_csv(in);
    std::istringstream ein(ev.str());
    read_events_csv(ein, back);

    REQUIRE(back.samples.size() == tr.samples.size());
    REQUIRE(back.events.size() == tr.events.size());
    for (size_t i = 0; i < tr.samples.size(); ++i) {
      CHECK(back.samples[i].t == tr.samples[i].t);
      CHECK((back.samples[i].x - tr.samples[i].x).norm() <= 1e-12);
      CHECK(back.samples[i].mode == tr.samples[i].mode);
    }
    for (size_t i = 0; i < tr.events.size(); ++i) {
      CHECK(back.events[i].t == tr.events[i].t);
      CHECK(back.events[i].kind == tr.events[i].kind);
    }
  }

  SECTION("identical trajectories serialize to identical bytes") {
    std::ostringstream again;
    write_trajectory_csv(tr, again);
    CHECK(again.str() == body.str());
  }

  SECTION("malformed input is rejected") {
    std::istringstream bad1("nope\n");
    CHECK_THROWS_AS(read_trajectory_csv(bad1), std::invalid_argument);
    std::istringstream bad2("t,x0,mode\n1,2\n");
    CHECK_THROWS_AS(read_trajectory_csv(bad2), std::invalid_argument);
  }
}

TEST_CASE("trajectory json round trip") {
  const Trajectory tr = sample_run();
  const nlohmann::json j = trajectory_to_json(tr);
  const Trajectory back = trajectory_from_json(j);
  REQUIRE(back.samples.size() == tr.samples.size());
  REQUIRE(back.events.size() == tr.events.size());
  for (size_t i = 0; i < tr.samples.size(); ++i) {
    CHECK(back.samples[i].t == tr.samples[i].t);
    CHECK((back.samples[i].x - tr.samples[i].x).norm() <= 1e-12);
  }
  CHECK(j.dump() == trajectory_to_json(back).dump());
}

TEST_CASE("file save and load with events sidecar") {
  namespace fs = std::filesystem;
  const Trajectory tr = sample_run();
  const fs::path dir = fs::temp_directory_path() / "nonsmooth_io_test";
  fs::create_directories(dir);

  for (const std::string format : {"csv", "json"}) {
    const std::string path = (dir / ("run." + format)).string();
    save_trajectory(tr, 3, path, format);
    CHECK(fs::exists(path));
    CHECK(fs::exists(events_path(path)));
    const Trajectory back = load_trajectory(path, format);
    REQUIRE(back.samples.size() == tr.samples.size());
    CHECK((back.samples.back().x - tr.samples.back().x).norm() <= 1e-12);
    CHECK(back.events.size() == tr.events.size());
  }
  fs::remove_all(dir);
}

TEST_CASE("sidecar path derivation") {
  CHECK(events_path("out.csv") == "out.events.csv");
  CHECK(events_path("dir/run.json") == "dir/run.events.json");
  CHECK(events_path("noext") == "noext.events");
  CHECK(events_path("dir.v2/noext") == "dir.v2/noext.events");
}

TEST_CASE("region map csv") {
  RegionMap map;
  map.cells.push_back({1.5, RegionLabel::TheoremSafe,
                       std::numeric_limits<double>::quiet_NaN(), ""});
  map.cells.push_back({2.5, RegionLabel::NumericSafe, 4.5e-4, ""});
  map.cells.push_back({4.5, RegionLabel::Unsafe, 0.75, "diverged"});
  const std::string csv = region_map_csv(map);
  CHECK(csv.rfind("gamma1,label,terminal_distance\n", 0) == 0);
  CHECK(csv.find("1.5,THEOREM_SAFE,nan") != std::string::npos);
  CHECK(csv.find("2.5,NUMERIC_SAFE,0.00044999999999999999") != std::string::npos);
  CHECK(csv.find("4.5,UNSAFE,0.75") != std::string::npos);
}
