#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "elc/errors.hpp"
#include "elc/io.hpp"
#include "elc/pipeline.hpp"

using namespace elc;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

PipelineConfig tiny() {
  PipelineConfig c;
  c.seed = 5;
  c.stage1.restarts = 4;
  c.stage1.max_iterations = 150;
  c.stage1.delta_bound = 0.9;
  c.stage1.t_max = 20000.0;
  c.stage2.colors = {Color::Blue};
  c.stage2.heights = {1};
  c.stage2.budget = 120;
  c.stage2.max_survivors = 1;
  c.thresholds = {0.2, 4000.0};
  c.trace_steps = 400;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("elc_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

Json without_timestamps(const ControllerDatabase& db) {
  Json j = db;
  j["provenance"].erase("started_utc");
  j["provenance"].erase("finished_utc");
  return j;
}

ScatterPoint point(double gap, double e, double t, double sx, double sp) {
  ScatterPoint p;
  p.min_gap = gap;
  p.error = e;
  p.time_ms = t;
  p.abs_s_x = sx;
  p.abs_s_p = sp;
  p.x_terms = 1.0;
  return p;
}

}  // namespace

TEST_CASE("config JSON round-trips and rejects unknown keys") {
  PipelineConfig c = tiny();
  c.problem = {6, 1, 4};
  c.red.numerical_aperture = 0.5;
  const Json j = c;
  CHECK(j["problem"]["initial_site"] == 2);  // 1-based on disk
  const PipelineConfig back = j.get<PipelineConfig>();
  CHECK(Json(back) == j);
  CHECK(back.problem.target_site == 4);
  CHECK(config_hash(back) == config_hash(c));
  CHECK_THROWS_AS(parse_config(R"({"stage2": {"budgett": 5}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"lattice": {"depth": -3}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"stage2": {"colors": ["green"]}})"), ValidationError);
  CHECK_THROWS_AS(parse_config("{not json"), ValidationError);
  const auto defaults = parse_config(R"({"$schema": "x", "description": "d"})");
  CHECK(config_hash(defaults) == config_hash(PipelineConfig{}));
}

TEST_CASE("config hash tracks scientific settings only") {
  PipelineConfig a = tiny();
  PipelineConfig b = a;
  b.threads = 7;
  CHECK(config_hash(a) == config_hash(b));
  b.stage2.budget += 1;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.seed += 1;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("derived seeds are distinct and reproducible") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(42, 3) == derive_seed(42, 3));
  CHECK(derive_seed(42, 3) != derive_seed(43, 3));
}

TEST_CASE("sign variants of a symmetric vector") {
  const auto v = sign_variants(BiasVector({0.3, -0.8, -0.8, 0.3}));
  REQUIRE(v.size() == 4);
  CHECK(v[0].values() == std::vector<double>{0.3, -0.8, 0.8, -0.3});
  CHECK(v[3].values() == std::vector<double>{-0.3, 0.8, -0.8, 0.3});
  for (const auto& b : v) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(b[j] == -b[3 - j]);
  }
  const auto odd = sign_variants(BiasVector({0.2, 0.5, 0.2}));
  CHECK(odd.size() == 4);
  CHECK(odd[0].values() == std::vector<double>{0.2, 0.5, -0.2});
}

TEST_CASE("stage-1 survivors and controller filter obey the thresholds") {
  std::vector<CandidateController> cands(3);
  cands[0].error = 0.005, cands[0].transfer_time = 600.0;
  cands[1].error = 0.02, cands[1].transfer_time = 100.0;
  cands[2].error = 0.001, cands[2].transfer_time = 700.0;
  const auto s = stage1_survivors(cands, Thresholds{}, 1.95879378e-4);
  REQUIRE(s.size() == 1);
  CHECK(s[0].transfer_time == 600.0);

  ControllerDatabase db;
  for (int i = 0; i < 20; ++i) {
    ControllerRecord r;
    r.id = std::to_string(i);
    r.solution.e_min = 0.001 * i;
    r.solution.t_min_ms = 10.0 * i;
    db.records.push_back(r);
  }
  const Thresholds th{0.012, 95.0};
  const auto f = filter_controllers(db, th);
  CHECK(f.records.size() == 10);
  for (const auto& r : f.records) CHECK((r.solution.e_min < th.max_error && r.solution.t_min_ms < th.max_time_ms));
  CHECK(filter_controllers(f, th).records.size() == f.records.size());
}

TEST_CASE("correlation table on a synthetic ensemble") {
  std::vector<ScatterPoint> pts;
  for (int i = 0; i < 8; ++i) pts.push_back(point(0.01 * (i + 1), 0.001 * i, 20.0 + i, 2.0 * i + 1.0, 100.0 - i));
  const auto t = correlation_table(pts);
  CHECK(t.samples == 8);
  CHECK(*t.values[0][0] == Approx(1.0));   // min_gap vs |s_x|
  CHECK(*t.values[0][1] == Approx(1.0));
  CHECK(*t.values[0][2] == Approx(-1.0));  // min_gap vs |s_p|
  CHECK(*t.values[2][3] == Approx(-1.0));
  CHECK(t.warnings.empty());

  for (auto& p : pts) p.abs_s_x = 1e-15;
  const auto u = correlation_table(pts);
  CHECK_FALSE(u.values[0][0].has_value());
  CHECK(u.values[0][2].has_value());
  CHECK_FALSE(u.warnings.empty());

  pts.resize(2);
  const auto small = correlation_table(pts);
  CHECK_FALSE(small.values[1][2].has_value());
  CHECK_FALSE(small.warnings.empty());
}

TEST_CASE("empty stage-1 survivors give an empty database with a diagnostic") {
  PipelineConfig c = tiny();
  c.thresholds = {1e-12, 1.0};
  const auto db = run_pipeline(c);
  CHECK(db.survivors.empty());
  CHECK(db.records.empty());
  CHECK(db.accepted_count() == 0);
  CHECK_FALSE(db.diagnostics.empty());
  const auto dir = scratch("empty");
  const auto res = emit_report(db, dir);
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "table1.csv"));
  CHECK_FALSE(res.warnings.empty());
}

TEST_CASE("tiny pipeline is deterministic, persists and reports") {
  PipelineConfig c = tiny();
  const auto a = run_pipeline(c);
  c.threads = 3;
  const auto b = run_pipeline(c);
  CHECK(without_timestamps(a) == without_timestamps(b));
  REQUIRE_FALSE(a.survivors.empty());
  CHECK(a.accepted_count() > 0);
  CHECK(a.records.size() + a.duplicates == a.stage2_runs);
  for (const auto& r : a.records) {
    CHECK(r.accepted == r.solution.accepted);
    CHECK(r.sensitivity.has_value() == r.accepted);
    if (r.accepted) CHECK((r.solution.e_min < 0.2 && r.solution.t_min_ms < 4000.0));
  }

  const auto dir = scratch("tiny");
  save_database(a, dir / "controllers.json");
  const auto loaded = load_database(dir / "controllers.json");
  CHECK(Json(loaded) == Json(a));

  Json tampered = Json::parse(slurp(dir / "controllers.json"));
  tampered["config"]["stage2"]["budget"] = 41;
  write_text(dir / "tampered.json", dump(tampered));
  CHECK_THROWS_AS(load_database(dir / "tampered.json"), ValidationError);

  const auto res = emit_report(a, dir);
  for (const char* f : {"summary.json", "table1.csv", "scatter_x.csv", "scatter_p.csv", "scatter_x.svg", "scatter_p.svg"}) {
    CHECK(fs::exists(dir / f));
  }
  const Json summary = Json::parse(slurp(dir / "summary.json"));
  CHECK(summary["accepted"]["total"] == a.accepted_count());
  CHECK(summary["config_hash"] == config_hash(c));
  for (const auto& r : a.records) {
    if (!r.accepted) continue;
    CHECK(fs::exists(dir / "traces" / (r.id + ".csv")));
    const std::string svg = slurp(dir / "traces" / (r.id + ".svg"));
    const auto at = svg.find("data-t-ms=\"");
    REQUIRE(at != std::string::npos);
    const double t_ms = std::stod(svg.substr(at + 11));
    CHECK(t_ms == Approx(r.solution.t_min_ms).epsilon(1e-6));
  }
  CHECK(res.files.size() >= 6);
}
