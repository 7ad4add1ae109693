#include "odlc/qp_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "odlc/analytics.hpp"
#include "odlc/errors.hpp"
#include "odlc/numeric.hpp"

namespace odlc {

namespace {

constexpr double kSumTol = 1e-12;      // projection equality tolerance
constexpr double kFeasSlack = 1e-9;    // accepted drift of carried energies
constexpr int kMaxBisections = 200;

double scale_of(double total, double sum_lower, double sum_upper) {
  return std::max({1.0, std::abs(total), std::abs(sum_lower), std::abs(sum_upper)});
}

// One decision profile (a load or the pseudo-load) over the solve window.
struct Block {
  std::vector<double> lower;
  std::vector<double> upper;
  double total = 0.0;
  std::vector<double> x;
  bool free = false;  // feasible set has more than one point
};

Block make_block(std::span<const double> lower, std::span<const double> upper,
                 double total, const std::string& who) {
  Block b{{lower.begin(), lower.end()}, {upper.begin(), upper.end()}, total, {}, false};
  const double lo = compensated_sum(b.lower);
  const double hi = compensated_sum(b.upper);
  const double slack = kFeasSlack * scale_of(total, lo, hi);
  if (total < lo - slack || total > hi + slack) {
    throw SolverError(SolverFailure::kInfeasible,
                      who + ": energy " + std::to_string(total) +
                          " outside attainable range [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");
  }
  b.total = std::clamp(total, lo, hi);
  int open = 0;
  for (std::size_t i = 0; i < b.lower.size(); ++i) open += b.upper[i] > b.lower[i];
  const double tight = kSumTol * scale_of(total, lo, hi);
  b.free = open >= 2 && b.total > lo + tight && b.total < hi - tight;
  return b;
}

double objective_of(std::span<const double> aggregate) {
  CompensatedSum acc;
  for (double g : aggregate) acc += g * g;
  return acc.value();
}

void refresh_aggregate(std::span<const double> base, const std::vector<Block>& blocks,
                       std::vector<double>& aggregate) {
  for (std::size_t i = 0; i < base.size(); ++i) {
    CompensatedSum acc;
    acc += base[i];
    for (const auto& b : blocks) acc += b.x[i];
    aggregate[i] = acc.value();
  }
}

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> trace;
};

// Projected gradient on min ‖base + Σ_k x_k‖² over the product of the
// blocks' box-sum sets. ∇_k = 2·aggregate for every block, so the Hessian
// is 2·JJᵀ with largest eigenvalue 2m for m free blocks.
SolveStats projected_gradient(std::span<const double> base, std::vector<Block>& blocks,
                              const SolverOptions& opts,
                              std::vector<double>& aggregate) {
  SolveStats stats;
  const auto n = base.size();
  aggregate.assign(n, 0.0);
  refresh_aggregate(base, blocks, aggregate);
  double objective = objective_of(aggregate);
  if (opts.record_objective) stats.trace.push_back(objective);

  const int m = static_cast<int>(
      std::count_if(blocks.begin(), blocks.end(), [](const Block& b) { return b.free; }));
  if (m == 0) return stats;
  const double lipschitz = 2.0 * m;
  const double inv_m = 1.0 / m;  // step (1/L) times gradient (2·aggregate)

  std::vector<std::vector<double>> next(blocks.size());
  std::vector<double> trial(n);
  for (int it = 0;; ++it) {
    double residual = 0.0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const Block& b = blocks[k];
      if (!b.free) continue;
      for (std::size_t i = 0; i < n; ++i) trial[i] = b.x[i] - inv_m * aggregate[i];
      next[k] = project_box_sum(trial, b.lower, b.upper, b.total);
      for (std::size_t i = 0; i < n; ++i) {
        residual = std::max(residual, std::abs(b.x[i] - next[k][i]));
      }
    }
    stats.residual = residual * lipschitz;
    stats.iterations = it;
    if (stats.residual <= opts.kkt_tol) break;
    if (it >= opts.max_iters) {
      throw SolverError(SolverFailure::kMaxIterations,
                        "projected gradient stopped after " +
                            std::to_string(opts.max_iters) +
                            " iterations with KKT residual " +
                            std::to_string(stats.residual));
    }
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      if (blocks[k].free) blocks[k].x.swap(next[k]);
    }
    refresh_aggregate(base, blocks, aggregate);
    objective = objective_of(aggregate);
    if (opts.record_objective) stats.trace.push_back(objective);
  }
  return stats;
}

std::vector<double> slice(const std::vector<double>& v, int first_slot) {
  return {v.begin() + (first_slot - 1), v.end()};
}

Schedule assemble(int first_slot, std::size_t load_count, const std::vector<Block>& blocks,
                  bool has_pseudo, std::vector<double> aggregate, SolveStats stats) {
  Schedule s;
  s.first_slot = first_slot;
  const auto n = static_cast<Eigen::Index>(aggregate.size());
  s.p.resize(static_cast<Eigen::Index>(load_count), n);
  for (std::size_t k = 0; k < load_count; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      s.p(static_cast<Eigen::Index>(k), i) = blocks[k].x[static_cast<std::size_t>(i)];
    }
  }
  s.q = has_pseudo ? blocks.back().x : std::vector<double>(aggregate.size(), 0.0);
  s.objective = objective_of(aggregate);
  s.aggregate = std::move(aggregate);
  s.iterations = stats.iterations;
  s.kkt_residual = stats.residual;
  s.objective_trace = std::move(stats.trace);
  return s;
}

std::string load_name(std::size_t k) { return "load " + std::to_string(k); }

}  // namespace

DeferrableLoad DeferrableLoad::windowed(int arrival, int deadline, double energy,
                                        double lo, double hi, int T) {
  DeferrableLoad load;
  load.arrival = arrival;
  load.deadline = deadline;
  load.energy = energy;
  load.p_min.assign(static_cast<std::size_t>(T), 0.0);
  load.p_max.assign(static_cast<std::size_t>(T), 0.0);
  for (int t = std::max(arrival, 1); t <= std::min(deadline, T); ++t) {
    load.p_min[static_cast<std::size_t>(t - 1)] = lo;
    load.p_max[static_cast<std::size_t>(t - 1)] = hi;
  }
  return load;
}

void DeferrableLoad::validate(int T) const {
  if (arrival < 1 || deadline < arrival || deadline > T) {
    throw ConfigError("deferrable load window [" + std::to_string(arrival) + ", " +
                      std::to_string(deadline) + "] outside [1, " +
                      std::to_string(T) + "]");
  }
  if (p_min.size() != static_cast<std::size_t>(T) ||
      p_max.size() != static_cast<std::size_t>(T)) {
    throw ConfigError("deferrable load bounds must have length T");
  }
  if (!std::isfinite(energy)) throw ConfigError("deferrable load energy not finite");
  for (int t = 1; t <= T; ++t) {
    const double lo = p_min[static_cast<std::size_t>(t - 1)];
    const double hi = p_max[static_cast<std::size_t>(t - 1)];
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
      throw ConfigError("deferrable load has p_min > p_max at slot " +
                        std::to_string(t));
    }
    if ((t < arrival || t > deadline) && (lo != 0.0 || hi != 0.0)) {
      throw ConfigError("deferrable load bounds must vanish outside its window");
    }
  }
  const double lo = compensated_sum(p_min);
  const double hi = compensated_sum(p_max);
  const double slack = kFeasSlack * scale_of(energy, lo, hi);
  if (energy < lo - slack || energy > hi + slack) {
    throw ConfigError("deferrable load energy " + std::to_string(energy) +
                      " cannot be met within its power bounds");
  }
}

PseudoLoadBounds PseudoLoadBounds::fallback(int t, int T, double expected_A) {
  if (t < 1 || t > T) throw std::out_of_range("PseudoLoadBounds: t outside [1, T]");
  PseudoLoadBounds q;
  const auto n = static_cast<std::size_t>(T - t + 1);
  q.q_min.assign(n, 0.0);
  q.q_max.assign(n, expected_A);
  q.q_max[0] = 0.0;
  q.total = expected_A;
  return q;
}

void SolverOptions::validate() const {
  if (!(kkt_tol > 0.0)) throw ConfigError("kkt_tol must be > 0");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
}

std::vector<double> project_box_sum(std::span<const double> v,
                                    std::span<const double> lower,
                                    std::span<const double> upper, double total) {
  const std::size_t n = v.size();
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("project_box_sum: length mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (lower[i] > upper[i]) {
      throw std::invalid_argument("project_box_sum: lower > upper");
    }
  }
  const double sum_lower = compensated_sum(lower);
  const double sum_upper = compensated_sum(upper);
  const double scale = scale_of(total, sum_lower, sum_upper);
  if (total < sum_lower - kSumTol * scale || total > sum_upper + kSumTol * scale) {
    throw SolverError(SolverFailure::kInfeasible,
                      "project_box_sum: total " + std::to_string(total) +
                          " outside [" + std::to_string(sum_lower) + ", " +
                          std::to_string(sum_upper) + "]");
  }
  if (total <= sum_lower) return {lower.begin(), lower.end()};
  if (total >= sum_upper) return {upper.begin(), upper.end()};

  std::vector<double> x(n);
  auto evaluate = [&](double mu) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::clamp(v[i] + mu, lower[i], upper[i]);
      acc += x[i];
    }
    return acc.value();
  };
  const double tol = kSumTol * std::max(1.0, std::abs(total));

  // Unclipped shift first; it is the exact answer whenever nothing clips.
  const double mu0 = (total - compensated_sum(v)) / static_cast<double>(n);
  double sum = evaluate(mu0);
  bool clipped = false;
  for (std::size_t i = 0; i < n; ++i) clipped |= (x[i] != v[i] + mu0);
  if (clipped || std::abs(sum - total) > tol) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, lower[i] - v[i]);
      hi = std::max(hi, upper[i] - v[i]);
    }
    for (int it = 0; it < kMaxBisections; ++it) {
      const double mid = 0.5 * (lo + hi);
      sum = evaluate(mid);
      if (std::abs(sum - total) <= tol || mid <= lo || mid >= hi) break;
      (sum < total ? lo : hi) = mid;
    }
  }

  // Spread the rounding residual over coordinates with room to move.
  for (int pass = 0; pass < 8; ++pass) {
    const double residual = total - compensated_sum(x);
    if (residual == 0.0) break;
    std::vector<std::size_t> room;
    for (std::size_t i = 0; i < n; ++i) {
      if (residual > 0.0 ? x[i] < upper[i] : x[i] > lower[i]) room.push_back(i);
    }
    if (room.empty()) break;
    const double share = residual / static_cast<double>(room.size());
    for (std::size_t i : room) x[i] = std::clamp(x[i] + share, lower[i], upper[i]);
  }
  if (std::abs(compensated_sum(x) - total) > tol) {
    throw SolverError(SolverFailure::kNonConvergence,
                      "project_box_sum: bisection did not reach the target sum");
  }
  return x;
}

Schedule solve_odlc_t(std::span<const double> b_t, double expected_A,
                      std::span<const DeferrableLoad> loads,
                      std::span<const double> remaining,
                      const PseudoLoadBounds& pseudo, int t,
                      const SolverOptions& opts, const WarmStart* warm) {
  opts.validate();
  const int T = static_cast<int>(b_t.size());
  if (t < 1 || t > T) throw std::out_of_range("solve_odlc_t: t outside [1, T]");
  if (remaining.size() != loads.size()) {
    throw std::invalid_argument("solve_odlc_t: one remaining energy per load");
  }
  const auto n = static_cast<std::size_t>(T - t + 1);
  if (pseudo.q_min.size() != n || pseudo.q_max.size() != n) {
    throw std::invalid_argument("solve_odlc_t: pseudo-load bounds must cover t..T");
  }
  if (std::abs(pseudo.total - expected_A) > kFeasSlack * std::max(1.0, std::abs(expected_A))) {
    throw std::invalid_argument("solve_odlc_t: pseudo-load total must equal E[A(t)]");
  }

  std::vector<Block> blocks;
  blocks.reserve(loads.size() + 1);
  for (std::size_t k = 0; k < loads.size(); ++k) {
    const auto& load = loads[k];
    if (load.p_min.size() != static_cast<std::size_t>(T) ||
        load.p_max.size() != static_cast<std::size_t>(T)) {
      throw std::invalid_argument("solve_odlc_t: load bounds must have length T");
    }
    const auto lo = slice(load.p_min, t);
    const auto hi = slice(load.p_max, t);
    blocks.push_back(make_block(lo, hi, remaining[k], load_name(k)));
  }
  blocks.push_back(make_block(pseudo.q_min, pseudo.q_max, expected_A, "pseudo-load"));

  const std::vector<double> base = slice({b_t.begin(), b_t.end()}, t);
  const std::vector<double> zeros(n, 0.0);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    Block& b = blocks[k];
    const bool is_pseudo = k + 1 == blocks.size();
    const std::vector<double>* seed = nullptr;
    if (warm != nullptr) {
      if (is_pseudo && warm->q.size() == n) seed = &warm->q;
      if (!is_pseudo && k < warm->p.size() && warm->p[k].size() == n) seed = &warm->p[k];
    }
    b.x = project_box_sum(seed != nullptr ? *seed : zeros, b.lower, b.upper, b.total);
  }

  std::vector<double> aggregate;
  // At t = T every set is a single point, reached by the projection above.
  SolveStats stats = projected_gradient(base, blocks, opts, aggregate);
  return assemble(t, loads.size(), blocks, true, std::move(aggregate), std::move(stats));
}

Schedule solve_odlc_offline(std::span<const DeferrableLoad> loads,
                            std::span<const double> b, const SolverOptions& opts) {
  opts.validate();
  const int T = static_cast<int>(b.size());
  if (T < 1) throw std::invalid_argument("solve_odlc_offline: empty baseload");
  std::vector<Block> blocks;
  blocks.reserve(loads.size());
  const std::vector<double> zeros(static_cast<std::size_t>(T), 0.0);
  for (std::size_t k = 0; k < loads.size(); ++k) {
    loads[k].validate(T);
    Block block = make_block(loads[k].p_min, loads[k].p_max, loads[k].energy, load_name(k));
    block.x = project_box_sum(zeros, block.lower, block.upper, block.total);
    blocks.push_back(std::move(block));
  }
  std::vector<double> aggregate;
  SolveStats stats = projected_gradient(b, blocks, opts, aggregate);
  return assemble(1, loads.size(), blocks, false, std::move(aggregate), std::move(stats));
}

MpcRun run_mpc(std::span<const DeferrableLoad> loads, const ScenarioDraw& scenario,
               const BaseloadModel& baseload, const ArrivalModel& arrivals,
               const SolverOptions& opts) {
  const int T = baseload.horizon();
  const auto TT = static_cast<std::size_t>(T);
  if (scenario.e.size() != TT || scenario.a.size() != TT ||
      scenario.realized_baseload.size() != TT) {
    throw std::invalid_argument("run_mpc: scenario does not cover the horizon");
  }

  // Loads sorted by arrival, so the arrived set at slot t is a prefix.
  std::vector<DeferrableLoad> ordered(loads.begin(), loads.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& x, const auto& y) { return x.arrival < y.arrival; });
  std::vector<CompensatedSum> arriving(TT);
  for (const auto& load : ordered) {
    load.validate(T);
    arriving[static_cast<std::size_t>(load.arrival - 1)] += load.energy;
  }
  for (std::size_t k = 0; k < TT; ++k) {
    const double a = scenario.a[k];
    if (std::abs(arriving[k].value() - a) > kFeasSlack * std::max(1.0, std::abs(a))) {
      throw std::invalid_argument("run_mpc: loads arriving at slot " +
                                  std::to_string(k + 1) + " carry " +
                                  std::to_string(arriving[k].value()) +
                                  " kWh but the scenario has a(t) = " +
                                  std::to_string(a));
    }
  }

  MpcRun run;
  run.history.reserve(TT);
  run.trajectory.d.reserve(TT);
  run.trajectory.levels.reserve(TT);
  std::vector<double> remaining(ordered.size());
  for (std::size_t k = 0; k < ordered.size(); ++k) remaining[k] = ordered[k].energy;

  std::vector<double> forecast(baseload.mean_profile);
  WarmStart warm;
  std::size_t arrived = 0;
  for (int t = 1; t <= T; ++t) {
    const double e_t = scenario.e[static_cast<std::size_t>(t - 1)];
    for (int tau = t; tau <= T; ++tau) {
      forecast[static_cast<std::size_t>(tau - 1)] += e_t * baseload.filter.at(tau - t);
    }
    while (arrived < ordered.size() && ordered[arrived].arrival <= t) ++arrived;

    const double expected_A = expected_future_arrivals(arrivals, t, T);
    const auto pseudo = PseudoLoadBounds::fallback(t, T, expected_A);
    Schedule schedule = solve_odlc_t(
        forecast, expected_A, std::span(ordered).first(arrived),
        std::span<const double>(remaining).first(arrived), pseudo, t, opts, &warm);

    CompensatedSum committed;
    for (std::size_t k = 0; k < arrived; ++k) {
      const double p = schedule.p(static_cast<Eigen::Index>(k), 0);
      committed += p;
      remaining[k] -= p;
    }
    const double b = scenario.realized_baseload[static_cast<std::size_t>(t - 1)];
    const double d = b + committed.value();
    run.trajectory.d.push_back(d);
    run.trajectory.levels.push_back(schedule.aggregate.front());
    if (d < b) ++run.trajectory.negative_deferrable_slots;

    // Next slot starts from this plan's tail.
    warm.p.assign(arrived, {});
    for (std::size_t k = 0; k < arrived; ++k) {
      const auto row = schedule.p.row(static_cast<Eigen::Index>(k));
      warm.p[k].assign(row.begin() + 1, row.end());
    }
    warm.q.assign(schedule.q.begin() + 1, schedule.q.end());
    run.history.push_back(std::move(schedule));
  }

  for (std::size_t k = 0; k < ordered.size(); ++k) {
    const double slack = kFeasSlack * std::max(1.0, std::abs(ordered[k].energy));
    if (std::abs(remaining[k]) > slack) {
      throw SolverError(SolverFailure::kEnergyDefect,
                        load_name(k) + " finished with " +
                            std::to_string(remaining[k]) + " kWh unserved");
    }
  }
  run.trajectory.variance = load_variance(run.trajectory.d);
  return run;
}

std::vector<DeferrableLoad> loads_from_arrivals(const ScenarioDraw& scenario,
                                                int devices_per_slot, double p_max) {
  if (devices_per_slot < 1) throw ConfigError("devices_per_slot must be >= 1");
  if (!(p_max > 0.0)) throw ConfigError("p_max must be > 0");
  const int T = scenario.horizon();
  std::vector<DeferrableLoad> loads;
  for (int t = 1; t <= T; ++t) {
    const double a = scenario.a[static_cast<std::size_t>(t - 1)];
    if (a < 0.0) {
      throw ConfigError("negative arrival energy at slot " + std::to_string(t) +
                        " cannot be split into device loads");
    }
    if (a == 0.0) continue;
    const double share = a / devices_per_slot;
    if (share > p_max * (T - t + 1)) {
      throw ConfigError("p_max too small to serve the arriving energy");
    }
    for (int k = 0; k < devices_per_slot; ++k) {
      loads.push_back(DeferrableLoad::windowed(t, T, share, 0.0, p_max, T));
    }
  }
  return loads;
}

}  // namespace odlc
