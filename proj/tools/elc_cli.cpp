// elc: energy-landscape controller synthesis and robustness analysis.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "elc/errors.hpp"
#include "elc/io.hpp"
#include "elc/pipeline.hpp"

namespace {

using namespace elc;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kInvalid = 2;
constexpr int kEmpty = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
  std::string input;
  bool quiet = false;
};

void log(const Common& c, const std::string& msg) {
  if (!c.quiet) std::cerr << "[elc] " << msg << '\n';
}

PipelineConfig resolve(PipelineConfig cfg, const Common& c) {
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  // --out only redirects files; the stored config (and its hash) keeps output_dir.
  cfg.validate();
  return cfg;
}

PipelineConfig config_from(const Common& c) {
  if (c.config.empty()) throw ValidationError("--config is required");
  return resolve(load_config(c.config), c);
}

fs::path out_dir(const Common& c, const PipelineConfig& cfg) { return c.out.empty() ? fs::path(cfg.output_dir) : fs::path(c.out); }

ControllerDatabase database_from(const Common& c) {
  if (c.input.empty()) throw ValidationError("--input <controllers.json> is required");
  ControllerDatabase db = load_database(c.input);
  if (c.threads) db.config.threads = *c.threads;
  return db;
}

int cmd_optimize_bias(const Common& c) {
  const PipelineConfig cfg = config_from(c);
  BiasOptimConfig s1 = cfg.stage1;
  s1.seed = cfg.seed;
  s1.threads = cfg.threads;
  log(c, "stage 1: " + std::to_string(s1.restarts) + " restarts");
  const auto candidates = optimize_biases(s1, cfg.problem, cfg.params);
  const auto survivors = stage1_survivors(candidates, cfg.thresholds, cfg.seconds_per_unit());
  const Json doc = {{"format", "elc-stage1/1"},
                    {"config_hash", config_hash(cfg)},
                    {"config", cfg},
                    {"time_unit_ms", cfg.seconds_per_unit() * 1e3},
                    {"candidates", candidates},
                    {"survivors", survivors}};
  const fs::path path = out_dir(c, cfg) / "stage1.json";
  write_text(path, dump(doc));
  std::printf("stage 1: %zu restarts, %zu survivors, best e = %.6g -> %s\n", candidates.size(), survivors.size(),
              candidates.empty() ? 1.0 : candidates.front().error, path.c_str());
  return survivors.empty() ? kEmpty : kOk;
}

int cmd_optimize_dmd(const Common& c, const std::vector<double>& target) {
  PipelineConfig cfg;
  std::vector<CandidateController> survivors;
  if (!target.empty()) {
    cfg = config_from(c);
    CandidateController cand;
    cand.biases = BiasVector(target);
    survivors.push_back(cand);
  } else {
    if (c.input.empty()) throw ValidationError("optimize-dmd needs --input <stage1.json> or --target");
    const Json doc = Json::parse(read_text(c.input));
    if (doc.value("format", std::string{}) != "elc-stage1/1") throw ValidationError("not a stage-1 result file");
    cfg = c.config.empty() ? resolve(doc.at("config").get<PipelineConfig>(), c) : config_from(c);
    doc.at("survivors").get_to(survivors);
    if (cfg.stage2.max_survivors > 0 && survivors.size() > cfg.stage2.max_survivors) {
      survivors.resize(cfg.stage2.max_survivors);
    }
  }
  for (const auto& s : survivors) {
    if (s.biases.chain_length() != cfg.problem.chain_length) throw ValidationError("target length does not match the chain");
  }
  ControllerDatabase db;
  db.config = cfg;
  db.provenance = {config_hash(cfg), cfg.seed, utc_timestamp(), "", ""};
  db.survivors = survivors;
  auto records = run_stage2(cfg, survivors, [&](const std::string& m) { log(c, m); });
  db.stage2_runs = records.size();
  for (auto& r : records) {
    char id[16];
    std::snprintf(id, sizeof id, "c%04zu", db.records.size() + 1);
    r.id = id;
    db.records.push_back(std::move(r));
  }
  db.provenance.finished_utc = utc_timestamp();
  const fs::path path = out_dir(c, cfg) / "controllers.json";
  save_database(db, path);
  std::printf("stage 2: %zu runs, %zu accepted -> %s\n", db.records.size(), db.accepted_count(), path.c_str());
  return db.accepted_count() == 0 ? kEmpty : kOk;
}

int cmd_evaluate(const Common& c, const std::vector<double>& biases) {
  if (!biases.empty()) {
    const PipelineConfig cfg = c.config.empty() ? resolve(PipelineConfig{}, c) : config_from(c);
    const BiasVector b(biases);
    if (b.chain_length() != cfg.problem.chain_length) throw ValidationError("bias count does not match the chain");
    if (!b.is_valid()) throw ValidationError("biases must satisfy |Delta_j| < 1");
    const auto trace = fidelity_trace(b, cfg.problem, cfg.params, cfg.time_limit(), cfg.trace_steps);
    const double t_ms = trace.t_min * cfg.seconds_per_unit() * 1e3;
    const bool ok = trace.e_min < cfg.thresholds.max_error && t_ms < cfg.thresholds.max_time_ms;
    const Json doc = {{"biases", b}, {"e_min", trace.e_min}, {"t_min", trace.t_min}, {"t_min_ms", t_ms}, {"accepted", ok}};
    std::cout << doc.dump(2) << '\n';
    return ok ? kOk : kEmpty;
  }
  const ControllerDatabase db = database_from(c);
  const PipelineConfig& cfg = db.config;
  Json rows = Json::array();
  double worst = 0.0;
  std::size_t accepted = 0;
  for (const auto& r : db.records) {
    if (!r.accepted) continue;
    ++accepted;
    const double e = fidelity_error(r.solution.achieved, r.solution.t_min, cfg.problem, cfg.params);
    const double dev = std::abs(e - r.solution.e_min);
    worst = std::max(worst, dev);
    rows.push_back({{"id", r.id}, {"stored_e", r.solution.e_min}, {"recomputed_e", e}, {"abs_deviation", dev}});
  }
  const Json doc = {{"controllers", rows}, {"accepted", accepted}, {"max_abs_deviation", worst}};
  const fs::path path = out_dir(c, cfg) / "evaluation.json";
  write_text(path, dump(doc));
  std::printf("evaluate: %zu accepted controllers, max |e - stored| = %.3g -> %s\n", accepted, worst, path.c_str());
  return accepted == 0 ? kEmpty : kOk;
}

int cmd_sensitivity(const Common& c) {
  ControllerDatabase db = database_from(c);
  compute_sensitivities(db, db.config.threads);
  const fs::path path = out_dir(c, db.config) / "controllers.json";
  save_database(db, path);
  std::size_t n = 0;
  for (const auto& r : db.records) n += r.sensitivity ? 1 : 0;
  std::printf("sensitivity: %zu records -> %s\n", n, path.c_str());
  return n == 0 ? kEmpty : kOk;
}

int cmd_report(const Common& c) {
  const ControllerDatabase db = database_from(c);
  const fs::path dir = out_dir(c, db.config);
  const auto res = emit_report(db, dir);
  for (const auto& w : res.warnings) log(c, "warning: " + w);
  std::printf("report: %zu files -> %s\n", res.files.size(), dir.c_str());
  return db.accepted_count() == 0 ? kEmpty : kOk;
}

int cmd_pipeline(const Common& c) {
  const PipelineConfig cfg = config_from(c);
  const fs::path dir = out_dir(c, cfg);
  const ControllerDatabase db = run_pipeline(cfg, [&](const std::string& m) { log(c, m); });
  save_database(db, dir / "controllers.json");
  const auto res = emit_report(db, dir);
  for (const auto& d : db.diagnostics) log(c, d);
  for (const auto& w : res.warnings) log(c, "warning: " + w);
  std::printf("pipeline: %zu survivors, %zu stage-2 runs, %zu accepted -> %s\n", db.survivors.size(),
              db.stage2_runs, db.accepted_count(), dir.c_str());
  return db.accepted_count() == 0 ? kEmpty : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-landscape controller synthesis for optical-lattice spin chains"};
  app.require_subcommand(1);
  Common common;
  std::vector<double> target;
  std::vector<double> biases;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", common.config, "JSON configuration file")->check(CLI::ExistingFile);
    if (needs_config) opt->required();
    sub->add_option("--seed", common.seed, "Override the configured seed");
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("-q,--quiet", common.quiet, "Suppress progress messages");
  };

  auto* bias = app.add_subcommand("optimize-bias", "Stage 1: optimize biases and transfer time");
  add_common(bias, true);
  auto* dmd = app.add_subcommand("optimize-dmd", "Stage 2: realize stage-1 targets with DMD patterns");
  add_common(dmd, false);
  dmd->add_option("--input", common.input, "stage1.json produced by optimize-bias")->check(CLI::ExistingFile);
  dmd->add_option("--target", target, "Explicit target biases (requires --config)")->delimiter(',');
  auto* eval = app.add_subcommand("evaluate", "Recompute fidelity of stored or explicit controllers");
  add_common(eval, false);
  eval->add_option("--input", common.input, "controllers.json")->check(CLI::ExistingFile);
  eval->add_option("--biases", biases, "Explicit biases, comma separated")->delimiter(',');
  auto* sens = app.add_subcommand("sensitivity", "Compute robustness records for accepted controllers");
  add_common(sens, false);
  sens->add_option("--input", common.input, "controllers.json")->required()->check(CLI::ExistingFile);
  auto* report = app.add_subcommand("report", "Emit traces, scatter plots, correlation table and summary");
  add_common(report, false);
  report->add_option("--input", common.input, "controllers.json")->required()->check(CLI::ExistingFile);
  auto* pipe = app.add_subcommand("pipeline", "Run both stages, sensitivity analysis and the report");
  add_common(pipe, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*bias) return cmd_optimize_bias(common);
    if (*dmd) return cmd_optimize_dmd(common, target);
    if (*eval) return cmd_evaluate(common, biases);
    if (*sens) return cmd_sensitivity(common);
    if (*report) return cmd_report(common);
    if (*pipe) return cmd_pipeline(common);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const Json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
