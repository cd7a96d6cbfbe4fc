#include "elc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>

#include "elc/errors.hpp"
#include "elc/io.hpp"
#include "elc/parallel.hpp"

#ifndef ELC_VERSION
#define ELC_VERSION "0.0.0"
#endif

namespace elc {

void Stage2Grid::validate() const {
  if (colors.empty()) throw ValidationError("stage2.colors must not be empty");
  if (heights.empty()) throw ValidationError("stage2.heights must not be empty");
  for (int h : heights) {
    if (h < 1) throw ValidationError("stage2.heights must be positive");
  }
  if (counts.empty()) throw ValidationError("stage2.counts must not be empty");
  for (int c : counts) {
    if (c < 1) throw ValidationError("stage2.counts must be positive");
  }
  if (superpixel_width < 1) throw ValidationError("stage2.superpixel_width must be positive");
  if (index_span < 1) throw ValidationError("stage2.index_span must be positive");
  if (!(power_min >= 0.0 && power_max <= 1.0 && power_min < power_max)) {
    throw ValidationError("stage2 power range must be a non-empty subset of [0, 1]");
  }
  if (budget < 1) throw ValidationError("stage2.budget must be positive");
  if (!(refine_window >= 0.0)) throw ValidationError("stage2.refine_window must be non-negative");
}

double PipelineConfig::seconds_per_unit() const { return time_unit(lattice.depth, lattice); }

double PipelineConfig::time_limit() const { return thresholds.max_time_ms * 1e-3 / seconds_per_unit(); }

void PipelineConfig::validate() const {
  lattice.validate();
  problem.validate();
  blue.validate();
  red.validate();
  if (blue.color() != Color::Blue) throw ValidationError("optics.blue must have a positive color_sign");
  if (red.color() != Color::Red) throw ValidationError("optics.red must have a negative color_sign");
  if (!(params.J > 0.0 && params.U > 0.0)) throw ValidationError("hubbard J and U must be positive");
  stage1.validate();
  stage2.validate();
  if (!(thresholds.max_error > 0.0 && thresholds.max_time_ms > 0.0)) {
    throw ValidationError("thresholds must be positive");
  }
  if (threads < 1) throw ValidationError("threads must be at least 1");
  if (trace_steps < 2) throw ValidationError("trace_steps must be at least 2");
}

std::size_t ControllerDatabase::accepted_count() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.accepted ? 1 : 0;
  return n;
}

std::string config_hash(const PipelineConfig& config) {
  const std::string text = Json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over a stream-offset state
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<CandidateController> stage1_survivors(const std::vector<CandidateController>& candidates,
                                                  const Thresholds& thresholds, double seconds_per_unit) {
  std::vector<CandidateController> out;
  for (const auto& c : candidates) {
    const double t_ms = c.transfer_time * seconds_per_unit * 1e3;
    if (c.error < thresholds.max_error && t_ms < thresholds.max_time_ms) out.push_back(c);
  }
  return out;
}

std::vector<BiasVector> sign_variants(const BiasVector& symmetric_biases) {
  const std::size_t m = symmetric_biases.size();
  const std::size_t free = (m + 1) / 2;
  if (free > 16) throw ValidationError("too many free biases for sign variants");
  std::vector<BiasVector> out;
  for (unsigned mask = 0; mask < (1U << free); ++mask) {
    std::vector<double> v(m);
    for (std::size_t j = 0; j < free; ++j) {
      const double s = (mask >> j) & 1U ? -1.0 : 1.0;
      v[j] = s * symmetric_biases[j];
      if (m - 1 - j != j) v[m - 1 - j] = -v[j];
    }
    out.emplace_back(std::move(v));
  }
  return out;
}

namespace {

// Same pattern with powers this close is reported once.
constexpr double kDuplicatePower = 1e-6;

struct Job {
  std::size_t survivor;
  unsigned variant;
  BiasVector target;
  Color color;
  int height;
  int count;
  std::uint64_t seed;
};

}  // namespace

std::vector<ControllerRecord> run_stage2(const PipelineConfig& config,
                                         const std::vector<CandidateController>& survivors,
                                         const ProgressFn& progress) {
  const Stage2Grid& grid = config.stage2;
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < survivors.size(); ++s) {
    std::vector<BiasVector> targets;
    if (grid.symmetric) {
      targets = sign_variants(survivors[s].biases);
      if (!grid.sign_variants) targets.resize(1);
    } else {
      targets = {survivors[s].biases};
    }
    for (unsigned v = 0; v < targets.size(); ++v) {
      for (Color c : grid.colors) {
        for (int h : grid.heights) {
          for (int n : grid.counts) {
            jobs.push_back({s, v, targets[v], c, h, n, derive_seed(config.seed, jobs.size())});
          }
        }
      }
    }
  }

  std::map<Color, BiasExtractor> extractors;
  for (Color c : grid.colors) {
    extractors.try_emplace(c, config.lattice, config.optics(c), config.problem.chain_length);
  }

  std::vector<ControllerRecord> records(jobs.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    DMDOptimConfig dc;
    dc.target = job.target;
    dc.color = job.color;
    dc.superpixel_width = grid.superpixel_width;
    dc.height_min = dc.height_max = job.height;
    dc.counts = {job.count};
    dc.index_span = grid.index_span;
    dc.power_min = grid.power_min;
    dc.power_max = grid.power_max;
    dc.symmetric = grid.symmetric;
    dc.budget = grid.budget;
    dc.initial_samples = grid.initial_samples;
    dc.seed = job.seed;
    const BiasExtractor& ex = extractors.at(job.color);
    const DMDSolution found = optimize_pattern(dc, ex);
    ControllerRecord& r = records[i];
    r.color = job.color;
    r.survivor = job.survivor;
    r.sign_variant = job.variant;
    r.height = job.height;
    r.count = job.count;
    r.seed = job.seed;
    r.solution = refine_power(found, ex, config.problem, config.params, config.thresholds,
                              config.seconds_per_unit(), grid.refine_window, grid.power_min, grid.power_max);
    r.accepted = r.solution.accepted;
    if (progress) {
      std::lock_guard lock(progress_mutex);
      const std::size_t k = ++done;
      const std::size_t every = std::max<std::size_t>(1, jobs.size() / 10);
      if (k % every == 0 || k == jobs.size()) progress("stage 2: " + std::to_string(k) + "/" + std::to_string(jobs.size()) + " runs");
    }
  });
  return records;
}

void compute_sensitivities(ControllerDatabase& db, std::size_t threads) {
  const PipelineConfig& config = db.config;
  std::map<Color, BiasExtractor> extractors;
  for (Color c : {Color::Blue, Color::Red}) {
    extractors.try_emplace(c, config.lattice, config.optics(c), config.problem.chain_length);
  }
  std::vector<std::string> errors(db.records.size());
  parallel_for(db.records.size(), threads, [&](std::size_t i) {
    ControllerRecord& r = db.records[i];
    r.sensitivity.reset();
    if (!r.accepted) return;
    try {
      r.sensitivity = analyze_solution(r.solution, extractors.at(r.color), config.problem, config.params);
    } catch (const std::exception& e) {
      errors[i] = r.id + ": sensitivity failed: " + e.what();
    }
  });
  for (auto& e : errors) {
    if (!e.empty()) db.diagnostics.push_back(std::move(e));
  }
}

ControllerDatabase run_pipeline(const PipelineConfig& config, const ProgressFn& progress) {
  config.validate();
  ControllerDatabase db;
  db.config = config;
  db.provenance.config_hash = config_hash(config);
  db.provenance.seed = config.seed;
  db.provenance.version = ELC_VERSION;
  db.provenance.started_utc = utc_timestamp();

  BiasOptimConfig s1 = config.stage1;
  s1.seed = config.seed;
  s1.threads = config.threads;
  if (progress) progress("stage 1: " + std::to_string(s1.restarts) + " restarts");
  const auto candidates = optimize_biases(s1, config.problem, config.params);
  db.stage1_restarts = candidates.size();
  db.survivors = stage1_survivors(candidates, config.thresholds, config.seconds_per_unit());
  if (config.stage2.max_survivors > 0 && db.survivors.size() > config.stage2.max_survivors) {
    db.survivors.resize(config.stage2.max_survivors);
  }
  if (progress) progress("stage 1: " + std::to_string(db.survivors.size()) + " survivors");
  if (db.survivors.empty()) {
    db.diagnostics.push_back("no stage-1 controller met the thresholds (best error " +
                             (candidates.empty() ? std::string("n/a") : std::to_string(candidates.front().error)) +
                             ")");
    db.provenance.finished_utc = utc_timestamp();
    return db;
  }

  auto records = run_stage2(config, db.survivors, progress);
  db.stage2_runs = records.size();

  for (auto& r : records) {
    const bool duplicate = std::any_of(db.records.begin(), db.records.end(), [&](const ControllerRecord& q) {
      return q.color == r.color && q.solution.pattern == r.solution.pattern &&
             std::abs(q.solution.power - r.solution.power) <= kDuplicatePower;
    });
    if (duplicate) {
      ++db.duplicates;
      continue;
    }
    char id[16];
    std::snprintf(id, sizeof id, "c%04zu", db.records.size() + 1);
    r.id = id;
    db.records.push_back(std::move(r));
  }

  if (progress) progress("sensitivity: " + std::to_string(db.accepted_count()) + " accepted controllers");
  compute_sensitivities(db, config.threads);
  if (db.accepted_count() == 0) db.diagnostics.push_back("no stage-2 solution met the thresholds");
  db.provenance.finished_utc = utc_timestamp();
  return db;
}

ControllerDatabase filter_controllers(const ControllerDatabase& db, const Thresholds& thresholds) {
  ControllerDatabase out = db;
  out.records.clear();
  for (const auto& r : db.records) {
    if (r.solution.e_min < thresholds.max_error && r.solution.t_min_ms < thresholds.max_time_ms) {
      out.records.push_back(r);
    }
  }
  return out;
}

}  // namespace elc
