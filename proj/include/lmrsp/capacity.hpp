#pragma once

// Capacity-region analysis: membership certificates for theta-scaled regions,
// the closed-form theta_min bound for two-state Markov channels, and frozen-
// queue Monte Carlo estimators of the benchmark quantities Upsilon, Psi, Phi
// and the stabilizable fraction theta.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "errors.hpp"
#include "lp.hpp"
#include "parallel.hpp"
#include "policy.hpp"
#include "queueing.hpp"
#include "rates.hpp"
#include "rng.hpp"
#include "topology.hpp"

namespace lmrsp {

// Witness that `a` decomposes over per-state schedule mixtures with slack:
// a = sum_s pi(s) sum_I beta_{s,I} D(s,I) and
// epsilon = theta_used - max_s sum_I beta_{s,I} > 0.
struct CapacityCertificate {
  std::map<std::pair<std::uint32_t, std::size_t>, double> beta;
  double epsilon = 0.0;
  double theta_used = 1.0;
};

struct MembershipResult {
  bool inside = false;
  bool feasible = false;        // false: `a` is not even in the rate cone
  double min_max_beta = std::numeric_limits<double>::infinity();
  std::optional<CapacityCertificate> certificate;
};

namespace detail {

struct StateWeights {
  std::vector<std::uint32_t> masks;
  std::vector<double> pi;
};

inline StateWeights enumerate_states(const ChannelModel& model,
                                     std::size_t max_states) {
  StateWeights sw;
  if (model.kind == ChannelKind::frozen) {
    sw.masks.push_back(channel_state_mask(model.frozen_state));
    sw.pi.push_back(1.0);
    return sw;
  }
  if (!(model.r > 0.0 && model.r < 1.0))
    throw InvalidRateError(
        "stationary distribution undefined for r outside (0, 1)");
  const int n = model.link_count();
  const std::size_t count = std::size_t{1} << n;
  if (count > max_states)
    throw SizeLimitError("channel-state enumeration exceeds the guard");
  const double pi = std::ldexp(1.0, -n);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    sw.masks.push_back(mask);
    sw.pi.push_back(pi);
  }
  return sw;
}

}  // namespace detail

// Solves: find beta >= 0 with sum_s pi(s) sum_I beta_{s,I} D(s,I) = a and
// max_s sum_I beta_{s,I} minimized. Inside theta*Gamma iff the minimized max
// is below theta by more than `tol` (strict interiority).
inline MembershipResult capacity_membership(const std::vector<double>& a,
                                            const ChannelModel& model,
                                            const ScheduleSet& set,
                                            double theta, double tol = 1e-8,
                                            std::size_t max_states = 4096) {
  model.validate();
  const int n = model.link_count();
  if (static_cast<int>(a.size()) != n || set.link_count() != n)
    throw LengthMismatchError("capacity_membership: length mismatch");
  if (!(theta > 0.0 && theta <= 1.0))
    throw ConfigError("capacity_membership: theta must be in (0, 1]");

  const auto states = detail::enumerate_states(model, max_states);

  // Columns: one per (state, schedule) with a nonzero rate vector; duplicate
  // rate vectors within a state keep the lowest schedule index.
  struct Column {
    std::size_t state = 0;
    std::size_t schedule = 0;
    RateVector rates;
  };
  std::vector<Column> columns;
  std::vector<std::vector<std::size_t>> state_columns(states.masks.size());
  for (std::size_t si = 0; si < states.masks.size(); ++si) {
    const ChannelState s = channel_state_from_mask(n, states.masks[si]);
    std::vector<RateVector> seen;
    for (std::size_t k = 0; k < set.size(); ++k) {
      RateVector d = rate_vector(model, s, set, k);
      if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; }))
        continue;
      if (std::find(seen.begin(), seen.end(), d) != seen.end()) continue;
      seen.push_back(d);
      state_columns[si].push_back(columns.size());
      columns.push_back({si, k, std::move(d)});
    }
  }

  // Variables: beta per column, then t = max_s sum beta. Minimize t.
  const std::size_t nb = columns.size();
  std::vector<double> cost(nb + 1, 0.0);
  cost[nb] = 1.0;
  std::vector<lp::Constraint> rows;
  for (int l = 0; l < n; ++l) {
    lp::Constraint row;
    row.coeff.assign(nb + 1, 0.0);
    for (std::size_t k = 0; k < nb; ++k)
      row.coeff[k] = states.pi[columns[k].state] * columns[k].rates[l];
    row.sense = lp::Sense::eq;
    row.rhs = a[l];
    rows.push_back(std::move(row));
  }
  for (std::size_t si = 0; si < states.masks.size(); ++si) {
    if (state_columns[si].empty()) continue;
    lp::Constraint row;
    row.coeff.assign(nb + 1, 0.0);
    for (std::size_t k : state_columns[si]) row.coeff[k] = 1.0;
    row.coeff[nb] = -1.0;
    row.sense = lp::Sense::le;
    row.rhs = 0.0;
    rows.push_back(std::move(row));
  }

  MembershipResult res;
  const auto sol = lp::minimize(cost, rows);
  if (sol.status != lp::Status::optimal) return res;  // not in the cone
  res.feasible = true;
  res.min_max_beta = sol.objective;
  res.inside = theta - sol.objective > tol;
  if (res.inside) {
    CapacityCertificate cert;
    cert.theta_used = theta;
    cert.epsilon = theta - sol.objective;
    for (std::size_t k = 0; k < nb; ++k)
      if (sol.x[k] > tol)
        cert.beta[{states.masks[columns[k].state], columns[k].schedule}] =
            sol.x[k];
    res.certificate = std::move(cert);
  }
  return res;
}

// Rebuilds the rate vector represented by a certificate; used to audit the
// LP round trip.
inline std::vector<double> reconstruct_rate(const CapacityCertificate& cert,
                                            const ChannelModel& model,
                                            const ScheduleSet& set) {
  const int n = model.link_count();
  std::vector<double> a(n, 0.0);
  for (const auto& [key, beta] : cert.beta) {
    const ChannelState s = channel_state_from_mask(n, key.first);
    const double pi = steady_state_prob(model, s);
    const RateVector d = rate_vector(model, s, set, key.second);
    for (int l = 0; l < n; ++l) a[l] += pi * beta * d[l];
  }
  return a;
}

// Closed-form lower bound on the stabilizable fraction for two-state Markov
// channels with per-link flip probability r.
inline double theta_min(double zeta, double rho, double delta, double r) {
  if (!(zeta >= 0.0 && zeta < 1.0)) throw ConfigError("theta_min: zeta");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("theta_min: rho");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("theta_min: delta");
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("theta_min: r");
  const double zp = zeta_prime(zeta, rho);
  return (1.0 - zp) /
         (1.0 + (1.0 - delta) / delta * ((1.0 - r) * rho + r));
}

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Expected maximum backlog-rate product E[max_I X.D(s, I)] over the
// stationary channel law. Exact state enumeration up to the guard, Monte
// Carlo beyond it.
inline Estimate estimate_upsilon(const QueueVector& x,
                                 const ChannelModel& model,
                                 const ScheduleSet& set, int reps, Rng& rng,
                                 std::size_t exact_states_limit = 4096) {
  const int n = model.link_count();
  if (static_cast<int>(x.size()) != n)
    throw LengthMismatchError("estimate_upsilon: length mismatch");
  const bool exact = model.kind == ChannelKind::frozen ||
                     (std::size_t{1} << n) <= exact_states_limit;
  if (exact) {
    Estimate e;
    if (model.kind == ChannelKind::frozen) {
      e.value = gmwm_solve(x, model.frozen_state, set, model).value;
      return e;
    }
    const double pi = std::ldexp(1.0, -n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      const ChannelState s = channel_state_from_mask(n, mask);
      e.value += pi * gmwm_solve(x, s, set, model).value;
    }
    return e;
  }
  if (reps < 1) throw ConfigError("estimate_upsilon: reps must be >= 1");
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < reps; ++i) {
    const ChannelState s = initial_state(model, rng);
    const double v = gmwm_solve(x, s, set, model).value;
    sum += v;
    sumsq += v * v;
  }
  Estimate e;
  e.value = sum / reps;
  if (reps > 1) {
    const double var = std::max(0.0, (sumsq - sum * sum / reps) / (reps - 1));
    e.std_error = std::sqrt(var / reps);
  }
  return e;
}

struct RolloutSums {
  double psi = 0.0;  // sum over m <= K-2 of X.(D_m - (1-rho) D'_m)
  double phi = 0.0;  // sum over m <= K-1 of X.D_m
};

// One frozen-queue rollout of length K from the given initial (schedule,
// channel state): the channel evolves and the policy keeps updating against
// the fixed X. D'_m pairs the slot-m schedule with the slot-(m+1) channel.
inline RolloutSums psi_phi_rollout(const QueueVector& x,
                                   std::size_t initial_schedule,
                                   const ChannelState& initial_s, int horizon,
                                   const PolicyParams& params,
                                   const ChannelModel& model,
                                   const ScheduleSet& set, Rng& rng) {
  RolloutSums sums;
  std::vector<double> w(x.size());
  ChannelState s = initial_s;
  LmrspState state{initial_schedule};
  detail::fill_link_weights(x, s, model, w);
  double value_now =
      detail::schedule_value(w, set.active_links[state.previous_schedule]);
  for (int m = 0; m < horizon; ++m) {
    sums.phi += value_now;
    if (m == horizon - 1) break;
    step_channel_inplace(model, s, rng);
    detail::fill_link_weights(x, s, model, w);
    const double value_carried =
        detail::schedule_value(w, set.active_links[state.previous_schedule]);
    sums.psi += value_now - (1.0 - params.rho) * value_carried;
    const auto diag = lmrsp_step(state, params, x, s, set, model, rng);
    value_now = detail::schedule_value(w, set.active_links[diag.chosen]);
  }
  return sums;
}

struct PsiPhiEstimate {
  Estimate psi;
  Estimate phi;
  double upsilon = 0.0;
  int horizon = 0;
  int reps = 0;
};

// Frozen-queue estimates of Psi and Phi from a fixed initial condition,
// both normalized by K * Upsilon(X).
inline PsiPhiEstimate estimate_psi_phi(const QueueVector& x,
                                       std::size_t initial_schedule,
                                       const ChannelState& initial_s,
                                       int horizon, const PolicyParams& params,
                                       const ChannelModel& model,
                                       const ScheduleSet& set, int reps,
                                       Rng& rng) {
  params.validate();
  if (horizon < 2) throw ConfigError("estimate_psi_phi: horizon must be >= 2");
  if (reps < 1) throw ConfigError("estimate_psi_phi: reps must be >= 1");
  if (is_zero(x))
    throw ZeroQueueError("estimate_psi_phi: zero queue vector");
  const double upsilon = estimate_upsilon(x, model, set, 1, rng).value;
  const double scale = 1.0 / (static_cast<double>(horizon) * upsilon);
  double psum = 0.0, psq = 0.0, fsum = 0.0, fsq = 0.0;
  for (int i = 0; i < reps; ++i) {
    const auto sums = psi_phi_rollout(x, initial_schedule, initial_s, horizon,
                                      params, model, set, rng);
    const double p = sums.psi * scale;
    const double f = sums.phi * scale;
    psum += p;
    psq += p * p;
    fsum += f;
    fsq += f * f;
  }
  PsiPhiEstimate est;
  est.upsilon = upsilon;
  est.horizon = horizon;
  est.reps = reps;
  est.psi.value = psum / reps;
  est.phi.value = fsum / reps;
  if (reps > 1) {
    const double pv = std::max(0.0, (psq - psum * psum / reps) / (reps - 1));
    const double fv = std::max(0.0, (fsq - fsum * fsum / reps) / (reps - 1));
    est.psi.std_error = std::sqrt(pv / reps);
    est.phi.std_error = std::sqrt(fv / reps);
  }
  return est;
}

// Draws an initial (schedule, channel state) close to the stationary law of
// the frozen-queue joint chain: stationary channel, oracle schedule, then a
// burn-in of policy steps.
inline std::pair<std::size_t, ChannelState> sample_stationary_initial(
    const QueueVector& x, const PolicyParams& params, const ChannelModel& model,
    const ScheduleSet& set, int burn_in, Rng& rng) {
  ChannelState s = initial_state(model, rng);
  LmrspState state{algorithm_a_sample(params, x, s, set, model, rng)};
  for (int i = 0; i < burn_in; ++i) {
    step_channel_inplace(model, s, rng);
    lmrsp_step(state, params, x, s, set, model, rng);
  }
  return {state.previous_schedule, s};
}

// Unit directions used for the infimum grid: every coordinate direction, the
// uniform direction, plus `extra` random directions in the nonnegative
// orthant.
inline std::vector<std::vector<double>> default_direction_grid(int n, int extra,
                                                               Rng& rng) {
  std::vector<std::vector<double>> dirs;
  for (int l = 0; l < n; ++l) {
    std::vector<double> d(n, 0.0);
    d[l] = 1.0;
    dirs.push_back(std::move(d));
  }
  std::vector<double> u(n, 1.0 / std::sqrt(static_cast<double>(n)));
  dirs.push_back(std::move(u));
  for (int i = 0; i < extra; ++i) {
    std::vector<double> d(n);
    double norm2 = 0.0;
    for (auto& v : d) {
      v = std::fabs(rng.normal());
      norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : d) v *= inv;
    dirs.push_back(std::move(d));
  }
  return dirs;
}

struct ThetaDirectionResult {
  std::vector<double> direction;
  QueueVector queue;
  double psi = 0.0, psi_std_error = 0.0;
  double phi = 0.0, phi_std_error = 0.0;
  double value = 0.0;  // max(1 - zeta' - ((1-delta)/delta) psi - sqrt(N) rho
                       //     alpha / (delta nu), phi)
};

struct ThetaEstimate {
  double theta_hat = 0.0;
  std::size_t grid_size = 0;
  double queue_scale = 0.0;
  int horizon = 0;
  int reps = 0;
  std::vector<ThetaDirectionResult> per_direction;
};

// Grid approximation of the stabilizable fraction: for each unit direction,
// scale to a large queue vector (scale invariance makes one magnitude
// enough), estimate Psi/Phi from stationary initial conditions, and take the
// minimum of the per-direction values. A finite grid can only overestimate
// the true infimum, so grid metadata is reported alongside. Directions run
// in parallel with per-direction seeds; results do not depend on `workers`.
inline ThetaEstimate estimate_theta(const ChannelModel& model,
                                    const ScheduleSet& set,
                                    const PolicyParams& params, int horizon,
                                    const std::vector<std::vector<double>>& grid,
                                    int reps, std::uint64_t seed,
                                    double queue_scale = 1e6,
                                    int burn_in = -1, int workers = 1) {
  params.validate();
  model.validate();
  const int n = model.link_count();
  if (grid.empty()) throw InvalidGridError("estimate_theta: empty grid");
  for (const auto& d : grid) {
    if (static_cast<int>(d.size()) != n)
      throw InvalidGridError("estimate_theta: direction length mismatch");
    double norm2 = 0.0;
    for (double v : d) {
      if (v < 0.0)
        throw InvalidGridError("estimate_theta: negative direction entry");
      norm2 += v * v;
    }
    if (std::fabs(std::sqrt(norm2) - 1.0) > 1e-9)
      throw InvalidGridError("estimate_theta: direction is not unit norm");
  }
  if (burn_in < 0) {
    burn_in = model.kind == ChannelKind::two_state_markov &&
                      model.r > 0.0 && model.r < 1.0
                  ? 10 * mixing_horizon(n, model.r)
                  : 10;
  }

  const double nu_val = nu(model, set);
  const auto [zeta_eff, delta_eff] = effective_zeta_delta(params, set.size());
  const double zp = zeta_prime(zeta_eff, params.rho);
  const double slack = std::sqrt(static_cast<double>(n)) * params.rho *
                       params.alpha / (delta_eff * nu_val);

  ThetaEstimate est;
  est.grid_size = grid.size();
  est.queue_scale = queue_scale;
  est.horizon = horizon;
  est.reps = reps;
  est.per_direction.resize(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t g) {
    QueueVector x(n);
    for (int l = 0; l < n; ++l)
      x[l] = static_cast<std::int64_t>(std::llround(grid[g][l] * queue_scale));
    if (is_zero(x)) throw ZeroQueueError("estimate_theta: direction rounds to zero");
    Rng rng(mix_seed(seed, g));
    const double upsilon = estimate_upsilon(x, model, set, 1, rng).value;
    const double scale = 1.0 / (static_cast<double>(horizon) * upsilon);
    double psum = 0.0, psq = 0.0, fsum = 0.0, fsq = 0.0;
    for (int i = 0; i < reps; ++i) {
      const auto [sched0, s0] =
          sample_stationary_initial(x, params, model, set, burn_in, rng);
      const auto sums =
          psi_phi_rollout(x, sched0, s0, horizon, params, model, set, rng);
      const double p = sums.psi * scale;
      const double f = sums.phi * scale;
      psum += p;
      psq += p * p;
      fsum += f;
      fsq += f * f;
    }
    ThetaDirectionResult row;
    row.direction = grid[g];
    row.queue = std::move(x);
    row.psi = psum / reps;
    row.phi = fsum / reps;
    if (reps > 1) {
      const double pv = std::max(0.0, (psq - psum * psum / reps) / (reps - 1));
      const double fv = std::max(0.0, (fsq - fsum * fsum / reps) / (reps - 1));
      row.psi_std_error = std::sqrt(pv / reps);
      row.phi_std_error = std::sqrt(fv / reps);
    }
    row.value = std::max(
        1.0 - zp - (1.0 - delta_eff) / delta_eff * row.psi - slack, row.phi);
    est.per_direction[g] = std::move(row);
  });
  est.theta_hat = std::numeric_limits<double>::infinity();
  for (const auto& row : est.per_direction)
    est.theta_hat = std::min(est.theta_hat, row.value);
  return est;
}

}  // namespace lmrsp
