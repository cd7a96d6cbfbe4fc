#include "elc/dmd_optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "elc/errors.hpp"

namespace elc {

namespace {

// Mixed search space for one superpixel count. Symmetric patterns are
// encoded by their positive half (`slots` indices) plus an optional center.
struct Space {
  int count = 0;
  int width = 1;
  int h_min = 1;
  int h_max = 1;
  int lo = 0;
  int hi = 0;
  int slots = 0;
  bool symmetric = true;
  bool center = false;
  double p_min = 0.0;
  double p_max = 1.0;

  [[nodiscard]] int dim() const { return slots + 2; }
};

struct Point {
  std::vector<int> slots;
  int height = 1;
  double power = 0.0;
};

Space make_space(const DMDOptimConfig& config, int count) {
  Space s;
  s.count = count;
  s.width = config.superpixel_width;
  s.h_min = config.height_min;
  s.h_max = config.height_max;
  s.hi = config.index_span / 2;
  s.symmetric = config.symmetric;
  s.p_min = config.power_min;
  s.p_max = config.power_max;
  if (s.symmetric) {
    s.center = count % 2 == 1;
    s.slots = count / 2;
    s.lo = std::max(1, s.center ? s.width : (s.width + 1) / 2);
  } else {
    s.slots = count;
    s.lo = -s.hi;
  }
  const bool fits = s.slots == 0 || (s.lo <= s.hi && (s.hi - s.lo) >= (s.slots - 1) * s.width);
  if (!fits) {
    throw ValidationError("no feasible superpixel placement for count " + std::to_string(count) +
                          " within index span " + std::to_string(config.index_span));
  }
  return s;
}

DMDPattern to_pattern(const Space& s, const Point& p) {
  DMDPattern pattern;
  pattern.width = s.width;
  pattern.height = p.height;
  pattern.symmetric = s.symmetric;
  if (s.symmetric) {
    for (auto it = p.slots.rbegin(); it != p.slots.rend(); ++it) pattern.indices.push_back(-*it);
    if (s.center) pattern.indices.push_back(0);
    pattern.indices.insert(pattern.indices.end(), p.slots.begin(), p.slots.end());
  } else {
    pattern.indices = p.slots;
  }
  return pattern;
}

// Sorts and spreads indices so neighbours are >= width apart inside [lo, hi].
bool repair(const Space& s, std::vector<int>& v) {
  std::sort(v.begin(), v.end());
  for (auto& x : v) x = std::clamp(x, s.lo, s.hi);
  for (std::size_t k = 1; k < v.size(); ++k) v[k] = std::max(v[k], v[k - 1] + s.width);
  if (!v.empty() && v.back() > s.hi) {
    v.back() = s.hi;
    for (std::size_t k = v.size() - 1; k-- > 0;) v[k] = std::min(v[k], v[k + 1] - s.width);
  }
  return v.empty() || v.front() >= s.lo;
}

Eigen::VectorXd embed(const Space& s, const Point& p) {
  Eigen::VectorXd e(s.dim());
  const double idx_range = std::max(1, s.hi - s.lo);
  for (int k = 0; k < s.slots; ++k) e(k) = (p.slots[static_cast<std::size_t>(k)] - s.lo) / idx_range;
  e(s.slots) = s.h_max > s.h_min ? double(p.height - s.h_min) / (s.h_max - s.h_min) : 0.0;
  e(s.slots + 1) = s.p_max > s.p_min ? (p.power - s.p_min) / (s.p_max - s.p_min) : 0.0;
  return e;
}

bool same_point(const Point& a, const Point& b) {
  return a.slots == b.slots && a.height == b.height && a.power == b.power;
}

Point random_point(const Space& s, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> idx(s.lo, s.hi);
  std::uniform_int_distribution<int> h(s.h_min, s.h_max);
  std::uniform_real_distribution<double> p(s.p_min, s.p_max);
  for (;;) {
    Point pt;
    pt.slots.resize(static_cast<std::size_t>(s.slots));
    for (auto& v : pt.slots) v = idx(rng);
    pt.height = h(rng);
    pt.power = p(rng);
    std::vector<int> sorted = pt.slots;
    std::sort(sorted.begin(), sorted.end());
    bool ok = true;
    for (std::size_t k = 1; k < sorted.size(); ++k) ok = ok && sorted[k] - sorted[k - 1] >= s.width;
    if (ok) {
      pt.slots = sorted;
      return pt;
    }
  }
}

// Cubic radial basis interpolant with a linear polynomial tail.
class CubicRbf {
 public:
  void fit(const std::vector<Eigen::VectorXd>& x, const std::vector<double>& f) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::Index d = x.front().size();
    centers_ = x;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + d + 1, n + d + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + d + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double r = (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]).norm();
        a(i, j) = r * r * r;
      }
      a(i, n) = 1.0;
      a(n, i) = 1.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        a(i, n + 1 + k) = x[static_cast<std::size_t>(i)](k);
        a(n + 1 + k, i) = x[static_cast<std::size_t>(i)](k);
      }
      rhs(i) = f[static_cast<std::size_t>(i)];
    }
    coef_ = a.colPivHouseholderQr().solve(rhs);
    if (!coef_.allFinite()) coef_.setZero();
  }

  [[nodiscard]] double operator()(const Eigen::VectorXd& x) const {
    const auto n = static_cast<Eigen::Index>(centers_.size());
    double v = coef_(n);
    for (Eigen::Index k = 0; k < x.size(); ++k) v += coef_(n + 1 + k) * x(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = (x - centers_[static_cast<std::size_t>(i)]).norm();
      v += coef_(i) * r * r * r;
    }
    return v;
  }

 private:
  std::vector<Eigen::VectorXd> centers_;
  Eigen::VectorXd coef_;
};

constexpr std::size_t kMaxSurrogatePoints = 300;
constexpr std::size_t kCandidatesPerStep = 100;
constexpr std::array<double, 4> kMeritWeights{0.3, 0.5, 0.8, 0.95};
constexpr int kRefineSteps = 200;

}  // namespace

void DMDOptimConfig::validate() const {
  if (target.size() == 0) throw ValidationError("stage-2 target bias vector is empty");
  if (superpixel_width < 1) throw ValidationError("superpixel width must be positive");
  if (height_min < 1 || height_max < height_min) throw ValidationError("invalid superpixel height range");
  if (counts.empty()) throw ValidationError("no superpixel counts configured");
  for (int c : counts) {
    if (c < 1) throw ValidationError("superpixel counts must be positive");
  }
  if (index_span < 1) throw ValidationError("index span must be positive");
  if (!(power_min >= 0.0 && power_max <= 1.0 && power_min < power_max)) {
    throw ValidationError("power range must be a non-empty subset of [0, 1]");
  }
  if (budget < 1) throw ValidationError("evaluation budget must be positive");
}

double extraction_penalty(const BiasVector& target) {
  double norm = 0.0;
  for (double v : target.values()) norm += v * v;
  return 10.0 + std::sqrt(norm);
}

double dmd_objective(const DMDPattern& pattern, double power, const BiasVector& target,
                     const BiasExtractor& extractor) {
  if (target.chain_length() != extractor.n_sites()) {
    throw ValidationError("target length does not match the chain");
  }
  try {
    const auto ex = extractor.extract(pattern, power);
    double sum = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j) {
      const double diff = ex.biases[j] - target[j];
      sum += diff * diff;
    }
    return std::sqrt(sum);
  } catch (const ExtractionError&) {
    return extraction_penalty(target);
  }
}

double dmd_objective(const DMDPattern& pattern, double power, const BiasVector& target,
                     const OpticsConfig& optics, const LatticeConfig& lattice, double depth,
                     std::size_t n_sites) {
  LatticeConfig l = lattice;
  l.depth = depth;
  return dmd_objective(pattern, power, target, BiasExtractor(l, optics, n_sites));
}

std::vector<std::vector<int>> enumerate_index_sets(int count, int index_span, int width,
                                                   bool symmetric) {
  DMDOptimConfig cfg;
  cfg.superpixel_width = width;
  cfg.index_span = index_span;
  cfg.symmetric = symmetric;
  const Space s = make_space(cfg, count);
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  auto recurse = [&](auto&& self, int start) -> void {
    if (static_cast<int>(current.size()) == s.slots) {
      Point p;
      p.slots = current;
      out.push_back(to_pattern(s, p).indices);
      return;
    }
    for (int v = start; v <= s.hi; ++v) {
      current.push_back(v);
      self(self, v + s.width);
      current.pop_back();
    }
  };
  recurse(recurse, s.lo);
  return out;
}

PatternSearchResult search_pattern(const DMDOptimConfig& config, int count,
                                   const BiasExtractor& extractor) {
  config.validate();
  const Space space = make_space(config, count);
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffU),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(count)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PatternSearchResult result;
  std::vector<Point> points;
  std::vector<Eigen::VectorXd> embedded;
  std::vector<double> values;
  std::size_t best = 0;

  auto evaluate = [&](const Point& p) {
    const DMDPattern pattern = to_pattern(space, p);
    const double f = dmd_objective(pattern, p.power, config.target, extractor);
    points.push_back(p);
    embedded.push_back(embed(space, p));
    values.push_back(f);
    result.audit.push_back({pattern, p.power, f});
    if (f < values[best]) best = values.size() - 1;
    return f;
  };

  // Latin-hypercube design over (slots, height, power).
  const std::size_t n0 = std::min(
      config.budget,
      config.initial_samples > 0
          ? config.initial_samples
          : std::max<std::size_t>(2 * static_cast<std::size_t>(space.dim()) + 2, config.budget / 10));
  {
    const auto dims = static_cast<std::size_t>(space.dim());
    std::vector<std::vector<std::size_t>> strata(dims, std::vector<std::size_t>(n0));
    for (auto& perm : strata) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
    }
    for (std::size_t i = 0; i < n0; ++i) {
      auto u = [&](std::size_t dim) { return (static_cast<double>(strata[dim][i]) + unit(rng)) / n0; };
      Point p;
      for (int k = 0; k < space.slots; ++k) {
        const int span = space.hi - space.lo + 1;
        p.slots.push_back(space.lo + std::min(span - 1, static_cast<int>(u(static_cast<std::size_t>(k)) * span)));
      }
      const int h_span = space.h_max - space.h_min + 1;
      p.height = space.h_min + std::min(h_span - 1, static_cast<int>(u(dims - 2) * h_span));
      p.power = space.p_min + u(dims - 1) * (space.p_max - space.p_min);
      if (!repair(space, p.slots)) p = random_point(space, rng);
      evaluate(p);
    }
    result.seed_samples = n0;
  }

  double scale = 1.0;
  int successes = 0;
  int failures = 0;
  const int fail_limit = std::max(5, space.dim());
  CubicRbf surrogate;
  std::size_t step = 0;

  while (values.size() < config.budget) {
    // Fit on the best points, with values above the median clipped.
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    if (order.size() > kMaxSurrogatePoints) order.resize(kMaxSurrogatePoints);
    std::vector<double> sorted_vals;
    for (auto i : order) sorted_vals.push_back(values[i]);
    const double median = sorted_vals[sorted_vals.size() / 2];
    std::vector<Eigen::VectorXd> fx;
    std::vector<double> fv;
    for (auto i : order) {
      fx.push_back(embedded[i]);
      fv.push_back(std::min(values[i], median));
    }
    surrogate.fit(fx, fv);

    // Candidate proposals around the incumbent (occasionally another top point).
    const int idx_radius = std::max(1, static_cast<int>(std::lround(scale * (space.hi - space.lo) / 4.0)));
    const int h_radius = std::max(1, static_cast<int>(std::lround(scale * (space.h_max - space.h_min) / 4.0)));
    const double p_sigma = 0.2 * scale * (space.p_max - space.p_min);
    const double change_prob = std::max(1.0 / space.dim(), 0.5);
    std::vector<Point> candidates;
    for (std::size_t c = 0; c < kCandidatesPerStep; ++c) {
      if (unit(rng) < 0.1) {
        candidates.push_back(random_point(space, rng));
        continue;
      }
      const std::size_t base_rank = unit(rng) < 0.8 ? 0 : std::min<std::size_t>(order.size() - 1, static_cast<std::size_t>(unit(rng) * 5));
      Point p = points[order[base_rank]];
      bool changed = false;
      while (!changed) {
        for (auto& v : p.slots) {
          if (unit(rng) < change_prob) {
            int d = std::uniform_int_distribution<int>(-idx_radius, idx_radius)(rng);
            if (d == 0) d = unit(rng) < 0.5 ? -1 : 1;
            v += d;
            changed = true;
          }
        }
        if (space.h_max > space.h_min && unit(rng) < change_prob) {
          int d = std::uniform_int_distribution<int>(-h_radius, h_radius)(rng);
          if (d == 0) d = unit(rng) < 0.5 ? -1 : 1;
          p.height = std::clamp(p.height + d, space.h_min, space.h_max);
          changed = true;
        }
        if (unit(rng) < change_prob) {
          double np = p.power + std::normal_distribution<double>(0.0, p_sigma)(rng);
          if (np < space.p_min) np = 2 * space.p_min - np;
          if (np > space.p_max) np = 2 * space.p_max - np;
          p.power = std::clamp(np, space.p_min, space.p_max);
          changed = true;
        }
      }
      if (repair(space, p.slots)) candidates.push_back(std::move(p));
    }
    candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                    [&](const Point& c) {
                                      return std::any_of(points.begin(), points.end(),
                                                         [&](const Point& q) { return same_point(c, q); });
                                    }),
                     candidates.end());
    if (candidates.empty()) {
      evaluate(random_point(space, rng));
      continue;
    }

    // Merit = w * scaled surrogate value + (1 - w) * scaled closeness to evaluated points.
    const double w = kMeritWeights[step++ % kMeritWeights.size()];
    std::vector<double> sv(candidates.size());
    std::vector<double> dv(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const Eigen::VectorXd e = embed(space, candidates[c]);
      sv[c] = surrogate(e);
      double dmin = std::numeric_limits<double>::infinity();
      for (const auto& q : embedded) dmin = std::min(dmin, (e - q).norm());
      dv[c] = dmin;
    }
    const auto [smin, smax] = std::minmax_element(sv.begin(), sv.end());
    const auto [dmin, dmax] = std::minmax_element(dv.begin(), dv.end());
    std::size_t pick = 0;
    double best_merit = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double vs = *smax > *smin ? (sv[c] - *smin) / (*smax - *smin) : 1.0;
      const double vd = *dmax > *dmin ? (*dmax - dv[c]) / (*dmax - *dmin) : 1.0;
      const double merit = w * vs + (1.0 - w) * vd;
      if (merit < best_merit) {
        best_merit = merit;
        pick = c;
      }
    }

    const double incumbent = values[best];
    const double f = evaluate(candidates[pick]);
    if (f < incumbent - 1e-3 * std::abs(incumbent)) {
      ++successes;
      failures = 0;
    } else {
      ++failures;
      successes = 0;
    }
    if (successes >= 3) {
      scale = std::min(1.0, 2.0 * scale);
      successes = 0;
    }
    if (failures >= fail_limit) {
      scale /= 2.0;
      failures = 0;
      if (scale < 1.0 / 64.0) scale = 1.0;
    }
  }

  // Polish the power with the best integer assignment fixed.
  {
    Point base = points[best];
    const double range = space.p_max - space.p_min;
    const double lo = std::max(space.p_min, base.power - 0.1 * range);
    const double hi = std::min(space.p_max, base.power + 0.1 * range);
    auto f_at = [&](double power) {
      Point p = base;
      p.power = power;
      return evaluate(p);
    };
    constexpr int kScan = 20;
    double best_p = base.power;
    double best_f = values[best];
    for (int i = 0; i <= kScan; ++i) {
      const double pw = lo + (hi - lo) * i / kScan;
      const double f = f_at(pw);
      if (f < best_f) {
        best_f = f;
        best_p = pw;
      }
    }
    const double h = (hi - lo) / kScan;
    golden_section(f_at, std::max(lo, best_p - h), std::min(hi, best_p + h), 1e-12 * std::max(range, 1e-300));
  }

  const Point& winner = points[best];
  DMDSolution& sol = result.solution;
  sol.pattern = to_pattern(space, winner);
  sol.power = winner.power;
  sol.color = config.color;
  sol.target = config.target;
  sol.objective = values[best];
  sol.evaluations = values.size();
  try {
    sol.achieved = extractor.extract(sol.pattern, sol.power).biases;
  } catch (const ExtractionError&) {
    sol.achieved = BiasVector();
  }
  return result;
}

DMDSolution optimize_pattern(const DMDOptimConfig& config, const BiasExtractor& extractor) {
  config.validate();
  DMDSolution best;
  bool have = false;
  for (int count : config.counts) {
    auto res = search_pattern(config, count, extractor);
    if (!have || res.solution.objective < best.objective) {
      best = std::move(res.solution);
      have = true;
    }
  }
  return best;
}

DMDSolution validate_solution(const DMDSolution& solution, const TransferProblem& problem,
                              const HubbardParams& params, const Thresholds& thresholds,
                              double seconds_per_unit) {
  DMDSolution out = solution;
  out.accepted = false;
  if (solution.achieved.size() + 1 != problem.chain_length || !solution.achieved.is_valid()) {
    out.singular = true;
    out.e_min = 1.0;
    out.t_min = 0.0;
    out.t_min_ms = 0.0;
    return out;
  }
  out.singular = false;
  const double t_max = thresholds.max_time_ms * 1e-3 / seconds_per_unit;
  const FidelityTrace trace = fidelity_trace(solution.achieved, problem, params, t_max);
  out.e_min = trace.e_min;
  out.t_min = trace.t_min;
  out.t_min_ms = trace.t_min * seconds_per_unit * 1e3;
  out.accepted = out.e_min < thresholds.max_error && out.t_min_ms < thresholds.max_time_ms;
  return out;
}

}  // namespace elc

namespace elc {

DMDSolution refine_power(const DMDSolution& solution, const BiasExtractor& extractor,
                         const TransferProblem& problem, const HubbardParams& params,
                         const Thresholds& thresholds, double seconds_per_unit, double window,
                         double power_min, double power_max) {
  auto at = [&](double power) {
    DMDSolution s = solution;
    s.power = power;
    try {
      s.achieved = extractor.extract(s.pattern, power).biases;
    } catch (const ExtractionError&) {
      s.achieved = BiasVector();
    }
    s = validate_solution(s, problem, params, thresholds, seconds_per_unit);
    s.objective = s.achieved.size() == solution.target.size()
                      ? dmd_objective(s.pattern, power, solution.target, extractor)
                      : extraction_penalty(solution.target);
    return s;
  };
  const DMDSolution nominal = at(solution.power);
  if (nominal.accepted || window <= 0.0) return nominal;

  // Nearest accepted power, searched outward from the distance optimum. The
  // accepted point is deliberately not an error minimum in p.
  for (int k = 1; k <= kRefineSteps; ++k) {
    const double dp = window * k / kRefineSteps;
    std::optional<DMDSolution> pick;
    for (double p : {solution.power - dp, solution.power + dp}) {
      if (p < power_min || p > power_max) continue;
      DMDSolution s = at(p);
      if (s.accepted && (!pick || s.e_min < pick->e_min)) pick = std::move(s);
    }
    if (pick) return *pick;
  }
  return nominal;
}

}  // namespace elc
