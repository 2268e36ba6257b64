#pragma once

// End-to-end slotted simulation: channel, arrivals, policy, queues. Collects
// time averages, a finite-horizon stability verdict, Little's-law delay, and
// a trace checksum. Per-slot draw order is fixed (channel flips by link,
// arrivals by link, oracle draws, switching coin) so identical (config, seed)
// pairs reproduce bit-identical traces.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "capacity.hpp"
#include "parallel.hpp"
#include "channel.hpp"
#include "errors.hpp"
#include "policy.hpp"
#include "queueing.hpp"
#include "rates.hpp"
#include "rng.hpp"
#include "topology.hpp"

namespace lmrsp {

struct StabilityThresholds {
  double stable_slope_factor = 0.01;
  double unstable_slope_factor = 0.1;
  double quarter_ratio = 2.0;
};

enum class StabilityVerdict { stable, unstable, inconclusive };

inline const char* to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::stable: return "stable";
    case StabilityVerdict::unstable: return "unstable";
    case StabilityVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct ExperimentConfig {
  NetworkGraph graph;
  InterferenceModel interference;
  ChannelModel channel;
  ArrivalModel arrivals;
  PolicyParams policy;
  std::int64_t horizon = 1000000;
  double warmup_fraction = 0.2;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool trace = false;
  StabilityThresholds stability;

  void validate() const {
    graph.validate();
    interference.validate();
    channel.validate();
    arrivals.validate();
    policy.validate();
    const int n = graph.link_count();
    if (channel.link_count() != n)
      throw ConfigError("config: channel good_rates length != link count");
    if (static_cast<int>(arrivals.mean.size()) != n)
      throw ConfigError("config: arrival mean length != link count");
    if (horizon < 1) throw ConfigError("config: horizon must be >= 1");
    if (!(warmup_fraction >= 0.0 && warmup_fraction <= 0.5))
      throw ConfigError("config: warmup_fraction must be in [0, 0.5]");
    if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    if (!(stability.stable_slope_factor > 0.0) ||
        !(stability.unstable_slope_factor >= stability.stable_slope_factor) ||
        !(stability.quarter_ratio > 0.0))
      throw ConfigError("config: bad stability thresholds");
  }
};

struct RunMetrics {
  std::uint64_t seed = 0;
  double load = std::numeric_limits<double>::quiet_NaN();  // set by sweeps
  std::int64_t horizon = 0;
  std::vector<double> per_link_queue_avg;
  double total_queue_avg = 0.0;
  std::vector<double> measured_arrival_rate;
  std::optional<double> avg_delay_slots;
  // Position of the configured arrival vector relative to the capacity
  // region: the minimized max_s sum_I beta of the membership program (1.0 =
  // on the boundary of Gamma). NaN when the program is skipped.
  double effective_load = std::numeric_limits<double>::quiet_NaN();
  StabilityVerdict verdict = StabilityVerdict::inconclusive;
  double queue_slope = 0.0;
  bool rho_alpha_ok = true;
  std::uint64_t trace_checksum = 0;
};

struct StabilityResult {
  StabilityVerdict verdict = StabilityVerdict::inconclusive;
  double slope = 0.0;
};

// Finite-horizon surrogate for "stable in the mean": a least-squares slope
// of the total-queue series over the post-warmup window, normalized by the
// mean arrival volume per slot, plus a late-vs-early window comparison.
// The factors are artifact conventions and are config-overridable.
inline StabilityResult detect_stability(const std::vector<double>& totals,
                                        double warmup_fraction,
                                        double arrival_volume_per_slot,
                                        const StabilityThresholds& th = {}) {
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 0.5))
    throw ConfigError("detect_stability: warmup_fraction in [0, 0.5]");
  const std::size_t start =
      static_cast<std::size_t>(warmup_fraction * totals.size());
  const std::size_t len = totals.size() - start;
  if (len < 10000)
    throw SeriesTooShortError("detect_stability: need >= 1e4 post-warmup slots");

  double mean_t = (len - 1) / 2.0, mean_y = 0.0;
  for (std::size_t i = 0; i < len; ++i) mean_y += totals[start + i];
  mean_y /= len;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double dt = i - mean_t;
    num += dt * (totals[start + i] - mean_y);
    den += dt * dt;
  }
  StabilityResult res;
  res.slope = num / den;

  auto window_mean = [&](std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += totals[start + i];
    return acc / (hi - lo);
  };
  const double q2 = window_mean(len / 4, len / 2);
  const double q4 = window_mean(3 * len / 4, len);

  const double norm = std::max(arrival_volume_per_slot, 1e-12);
  const double settle_slack = 1e-9 * std::max(1.0, norm);
  if (res.slope < th.stable_slope_factor * norm &&
      q4 <= th.quarter_ratio * q2 + settle_slack) {
    res.verdict = StabilityVerdict::stable;
  } else if (res.slope > th.unstable_slope_factor * norm) {
    res.verdict = StabilityVerdict::unstable;
  } else {
    res.verdict = StabilityVerdict::inconclusive;
  }
  return res;
}

// Little's law over the measured window: mean total backlog divided by the
// measured arrival volume. Defined only for stable runs with arrivals.
inline double average_delay(const RunMetrics& m) {
  if (m.verdict != StabilityVerdict::stable)
    throw UndefinedDelayError("average_delay: run not stable");
  double lambda = 0.0;
  for (double v : m.measured_arrival_rate) lambda += v;
  if (!(lambda > 0.0))
    throw UndefinedDelayError("average_delay: no arrivals");
  return m.total_queue_avg / lambda;
}

namespace detail {

struct Fnv64 {
  std::uint64_t h = 1469598103934665603ULL;
  void add_bytes(const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  }
  template <class T>
  void add(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    add_bytes(&v, sizeof v);
  }
};

}  // namespace detail

struct TraceRecord {
  std::int64_t t = 0;
  std::uint32_t channel_mask = 0;
  std::size_t candidate = 0;
  std::size_t schedule = 0;
  double phi = 0.0;
  double accept_prob = 0.0;
  bool accepted = false;
  const QueueVector* queue = nullptr;  // X(t+1), after the slot's update
  const std::vector<std::int64_t>* arrivals = nullptr;
  const RateVector* rates = nullptr;
  const std::vector<std::int64_t>* wasted = nullptr;
};

using TraceSink = std::function<void(const TraceRecord&)>;

// Prevalidated simulation context; the schedule set is shared read-only
// across replications.
struct Experiment {
  ExperimentConfig config;
  std::shared_ptr<const ScheduleSet> set;
  double nu_value = 0.0;       // 0 when some link can never transmit
  bool rho_alpha_ok = true;    // rho*alpha < delta*nu/sqrt(N)
  double arrival_min_max_beta = std::numeric_limits<double>::quiet_NaN();
};

inline Experiment make_experiment(const ExperimentConfig& config,
                                  bool membership_check = true) {
  config.validate();
  Experiment ex;
  ex.config = config;
  ex.set = std::make_shared<const ScheduleSet>(
      enumerate_schedules(config.graph, config.interference));
  try {
    ex.nu_value = nu(config.channel, *ex.set);
  } catch (const ZeroNuError&) {
    ex.nu_value = 0.0;
  } catch (const InvalidRateError&) {
    ex.nu_value = 0.0;  // r in {0, 1}: no stationary law to average over
  }
  const double n = static_cast<double>(config.graph.link_count());
  ex.rho_alpha_ok =
      ex.nu_value > 0.0 &&
      config.policy.rho * config.policy.alpha <
          config.policy.delta * ex.nu_value / std::sqrt(n);
  if (membership_check) {
    try {
      const auto res = capacity_membership(config.arrivals.mean,
                                           config.channel, *ex.set, 1.0);
      if (res.feasible) ex.arrival_min_max_beta = res.min_max_beta;
    } catch (const Error&) {
      // Position relative to Gamma is diagnostic only; leave it NaN.
    }
  }
  return ex;
}

// One replication. Slot order: channel state (stationary draw at t = 0),
// arrivals, policy (plain oracle draw at t = 0, pick-and-compare afterward),
// transmission, queue update.
inline RunMetrics run_simulation(const Experiment& ex, std::uint64_t seed,
                                 const TraceSink* sink = nullptr) {
  const auto& cfg = ex.config;
  const auto& set = *ex.set;
  const int n = cfg.graph.link_count();
  const std::int64_t horizon = cfg.horizon;
  constexpr std::int64_t kQueueCap = std::int64_t{1} << 60;

  Rng rng(mix_seed(seed, 0));
  QueueVector x(n, 0);
  std::vector<std::int64_t> arrivals(n, 0), wasted(n, 0);
  RateVector rates(n, 0.0);
  ChannelState s = initial_state(cfg.channel, rng);
  LmrspState policy_state;
  StepDiagnostics diag;

  std::vector<double> totals;
  totals.reserve(horizon);
  const std::int64_t warmup_slots =
      static_cast<std::int64_t>(cfg.warmup_fraction * horizon);
  std::vector<double> sum_x(n, 0.0), sum_a(n, 0.0);
  detail::Fnv64 checksum;

  for (std::int64_t t = 0; t < horizon; ++t) {
    double total = 0.0;
    for (int l = 0; l < n; ++l) total += static_cast<double>(x[l]);
    totals.push_back(total);
    if (t >= warmup_slots)
      for (int l = 0; l < n; ++l) sum_x[l] += static_cast<double>(x[l]);

    if (t > 0) step_channel_inplace(cfg.channel, s, rng);
    {
      auto drawn = sample_arrivals(cfg.arrivals, rng);
      arrivals.swap(drawn);
    }
    if (t == 0) {
      policy_state = lmrsp_init(cfg.policy, x, s, set, cfg.channel, rng);
      diag = StepDiagnostics{policy_state.previous_schedule, 0.0, 1.0, true,
                             policy_state.previous_schedule};
    } else {
      diag = lmrsp_step(policy_state, cfg.policy, x, s, set, cfg.channel, rng);
    }
    detail::fill_rates(cfg.channel, s, set.active_links[diag.chosen], rates);
    detail::queue_step_inplace(x, arrivals, rates, wasted);

    if (t >= warmup_slots)
      for (int l = 0; l < n; ++l) sum_a[l] += static_cast<double>(arrivals[l]);

    checksum.add(t);
    checksum.add(channel_state_mask(s));
    checksum.add(static_cast<std::uint64_t>(diag.chosen));
    for (int l = 0; l < n; ++l) {
      checksum.add(x[l]);
      checksum.add(arrivals[l]);
      checksum.add(wasted[l]);
    }
    if (sink) {
      TraceRecord rec;
      rec.t = t;
      rec.channel_mask = channel_state_mask(s);
      rec.candidate = diag.candidate;
      rec.schedule = diag.chosen;
      rec.phi = diag.phi;
      rec.accept_prob = diag.accept_prob;
      rec.accepted = diag.accepted;
      rec.queue = &x;
      rec.arrivals = &arrivals;
      rec.rates = &rates;
      rec.wasted = &wasted;
      (*sink)(rec);
    }
    for (int l = 0; l < n; ++l)
      if (x[l] > kQueueCap)
        throw QueueOverflowError("run_simulation: queue exceeded 2^60");
  }

  RunMetrics m;
  m.seed = seed;
  m.horizon = horizon;
  m.rho_alpha_ok = ex.rho_alpha_ok;
  m.effective_load = ex.arrival_min_max_beta;
  m.trace_checksum = checksum.h;
  const double post = static_cast<double>(horizon - warmup_slots);
  m.per_link_queue_avg.resize(n);
  m.measured_arrival_rate.resize(n);
  double lambda_total = 0.0;
  for (int l = 0; l < n; ++l) {
    m.per_link_queue_avg[l] = sum_x[l] / post;
    m.measured_arrival_rate[l] = sum_a[l] / post;
    m.total_queue_avg += m.per_link_queue_avg[l];
    lambda_total += m.measured_arrival_rate[l];
  }

  if (horizon - warmup_slots >= 10000) {
    double volume = 0.0;
    for (double a : cfg.arrivals.mean) volume += a;
    const auto st = detect_stability(totals, cfg.warmup_fraction, volume,
                                     cfg.stability);
    m.verdict = st.verdict;
    m.queue_slope = st.slope;
  }
  if (m.verdict == StabilityVerdict::stable && lambda_total > 0.0)
    m.avg_delay_slots = m.total_queue_avg / lambda_total;
  return m;
}

inline RunMetrics run_simulation(const ExperimentConfig& config,
                                 std::uint64_t seed,
                                 const TraceSink* sink = nullptr) {
  return run_simulation(make_experiment(config), seed, sink);
}

// Scales a nonnegative direction onto the boundary of the capacity region
// using the membership program (optimal value is linear in the rate vector).
inline std::vector<double> scale_to_gamma_boundary(
    const std::vector<double>& direction, const ChannelModel& model,
    const ScheduleSet& set) {
  const auto res = capacity_membership(direction, model, set, 1.0);
  if (!res.feasible || !(res.min_max_beta > 0.0))
    throw ConfigError("direction is not an interior ray of the rate cone");
  std::vector<double> boundary = direction;
  for (auto& v : boundary) v /= res.min_max_beta;
  return boundary;
}

struct SweepResult {
  std::vector<double> loads;
  std::vector<RunMetrics> rows;  // ordered by (load, seed)
  std::optional<double> largest_all_stable;
  std::optional<double> smallest_any_unstable;
  double monotone_seed_fraction = 1.0;  // stable prefix along the load grid
};

// Runs the simulator at a = load * direction for every load and seed.
// `direction` is expected to sit on the Gamma boundary so loads read as
// fractions of capacity.
inline SweepResult sweep_load(const ExperimentConfig& base,
                              const std::vector<double>& direction,
                              const std::vector<double>& loads,
                              int workers = 1) {
  if (loads.empty()) throw ConfigError("sweep_load: empty load grid");
  for (std::size_t i = 1; i < loads.size(); ++i)
    if (!(loads[i] > loads[i - 1]))
      throw ConfigError("sweep_load: loads must be increasing");
  if (direction.size() != base.arrivals.mean.size())
    throw LengthMismatchError("sweep_load: direction length mismatch");

  const Experiment base_ex = make_experiment(base, false);
  std::vector<Experiment> per_load;
  for (double load : loads) {
    Experiment ex = base_ex;
    auto& mean = ex.config.arrivals.mean;
    for (std::size_t l = 0; l < mean.size(); ++l)
      mean[l] = load * direction[l];
    ex.config.arrivals.validate();
    try {
      const auto res = capacity_membership(ex.config.arrivals.mean,
                                           ex.config.channel, *ex.set, 1.0);
      if (res.feasible) ex.arrival_min_max_beta = res.min_max_beta;
    } catch (const Error&) {
    }
    per_load.push_back(std::move(ex));
  }

  const std::size_t n_seeds = base.seeds.size();
  SweepResult result;
  result.loads = loads;
  result.rows.resize(loads.size() * n_seeds);
  parallel_for(result.rows.size(), workers, [&](std::size_t job) {
    const std::size_t li = job / n_seeds;
    const std::size_t si = job % n_seeds;
    RunMetrics m = run_simulation(per_load[li], base.seeds[si]);
    m.load = loads[li];
    result.rows[job] = std::move(m);
  });

  std::size_t monotone = 0;
  for (std::size_t si = 0; si < n_seeds; ++si) {
    bool seen_non_stable = false, ok = true;
    for (std::size_t li = 0; li < loads.size(); ++li) {
      const auto v = result.rows[li * n_seeds + si].verdict;
      if (v != StabilityVerdict::stable) seen_non_stable = true;
      else if (seen_non_stable) ok = false;
    }
    if (ok) ++monotone;
  }
  result.monotone_seed_fraction = static_cast<double>(monotone) / n_seeds;

  for (std::size_t li = 0; li < loads.size(); ++li) {
    bool all_stable = true, any_unstable = false;
    for (std::size_t si = 0; si < n_seeds; ++si) {
      const auto v = result.rows[li * n_seeds + si].verdict;
      all_stable = all_stable && v == StabilityVerdict::stable;
      any_unstable = any_unstable || v == StabilityVerdict::unstable;
    }
    if (all_stable) result.largest_all_stable = loads[li];
    if (any_unstable && !result.smallest_any_unstable)
      result.smallest_any_unstable = loads[li];
  }
  return result;
}

}  // namespace lmrsp
