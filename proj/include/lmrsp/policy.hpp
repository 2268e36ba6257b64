#pragma once

// The linear-memory randomized scheduling policy: a pick-and-compare scheme
// whose only carried state is the previous schedule vector. Each slot a
// randomized oracle proposes a candidate schedule; the policy computes the
// normalized backlog-rate improvement phi of the candidate over the
// incumbent and switches with probability f(phi).

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "errors.hpp"
#include "queueing.hpp"
#include "rates.hpp"
#include "rng.hpp"
#include "topology.hpp"

namespace lmrsp {

enum class OracleKind { exact, uniform, noisy_oracle, greedy_matching };

struct PolicyParams {
  double alpha = 0.01;  // denominator regularizer in phi
  double rho = 0.1;     // half-width of the linear region of f
  double zeta = 0.0;    // oracle approximation gap (analysis-side)
  double delta = 1.0;   // oracle success probability
  OracleKind oracle = OracleKind::exact;

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("policy: alpha must be > 0");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("policy: rho in (0, 1)");
    if (!(zeta >= 0.0 && zeta < 1.0)) throw ConfigError("policy: zeta in [0, 1)");
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("policy: delta in (0, 1]");
  }
};

// zeta' = 1 - (1 - rho)(1 - zeta)
inline double zeta_prime(double zeta, double rho) {
  return 1.0 - (1.0 - rho) * (1.0 - zeta);
}

// The (zeta, delta) guarantee actually realized by each oracle kind.
inline std::pair<double, double> effective_zeta_delta(
    const PolicyParams& params, std::size_t schedule_count) {
  switch (params.oracle) {
    case OracleKind::exact:
      return {0.0, 1.0};
    case OracleKind::uniform:
      return {0.0, 1.0 / static_cast<double>(schedule_count)};
    case OracleKind::noisy_oracle:
      return {0.0, params.delta};
    case OracleKind::greedy_matching:
      return {0.5, 1.0};
  }
  throw UnsupportedKindError("unknown oracle kind");
}

struct GmwmResult {
  std::size_t schedule = 0;  // canonical index
  double value = 0.0;        // max backlog-rate product
};

namespace detail {

// Per-link weight of scheduling the link alone: X_l * rate_l if good.
inline void fill_link_weights(const QueueVector& x, const ChannelState& s,
                              const ChannelModel& model,
                              std::vector<double>& w) {
  for (std::size_t l = 0; l < x.size(); ++l)
    w[l] = s[l] ? static_cast<double>(x[l]) * model.good_rates[l] : 0.0;
}

inline double schedule_value(const std::vector<double>& w,
                             const std::vector<int>& active) {
  double acc = 0.0;
  for (int l : active) acc += w[l];
  return acc;
}

inline GmwmResult gmwm_scan(const std::vector<double>& w,
                            const ScheduleSet& set) {
  GmwmResult best;  // empty schedule, value 0; lowest index wins ties
  for (std::size_t i = 1; i < set.size(); ++i) {
    const double v = schedule_value(w, set.active_links[i]);
    if (v > best.value) {
      best.value = v;
      best.schedule = i;
    }
  }
  return best;
}

}  // namespace detail

// Maximizer of the backlog-rate product X.D(s, I) over the schedule set.
// Ties break to the lowest canonical index, so the empty schedule wins when
// every product is zero.
inline GmwmResult gmwm_solve(const QueueVector& x, const ChannelState& s,
                             const ScheduleSet& set, const ChannelModel& model) {
  if (x.size() != s.size() ||
      static_cast<int>(x.size()) != set.link_count() ||
      model.link_count() != set.link_count())
    throw LengthMismatchError("gmwm_solve: length mismatch");
  std::vector<double> w(x.size());
  detail::fill_link_weights(x, s, model, w);
  return detail::gmwm_scan(w, set);
}

namespace detail {

// Greedy max-weight matching under the node-exclusive model: edges in
// decreasing weight order (index breaks ties), skipping zero weights.
// Guarantees at least half the optimal backlog-rate product.
inline std::size_t greedy_matching_candidate(const std::vector<double>& w,
                                             const ScheduleSet& set) {
  std::vector<int> order;
  for (std::size_t l = 0; l < w.size(); ++l)
    if (w[l] > 0.0) order.push_back(static_cast<int>(l));
  std::sort(order.begin(), order.end(), [&w](int a, int b) {
    if (w[a] != w[b]) return w[a] > w[b];
    return a < b;
  });
  std::vector<std::uint8_t> node_used(set.graph.node_count, 0);
  std::uint32_t mask = 0;
  for (int l : order) {
    const auto [u, v] = set.graph.edges[l];
    if (node_used[u] || node_used[v]) continue;
    node_used[u] = node_used[v] = 1;
    mask |= (1u << l);
  }
  auto it = set.index_by_mask.find(mask);
  if (it == set.index_by_mask.end())
    throw InvalidScheduleError("greedy matching produced an unknown schedule");
  return it->second;
}

inline std::size_t sample_candidate(const PolicyParams& params,
                                    const std::vector<double>& w,
                                    const ScheduleSet& set, Rng& rng) {
  switch (params.oracle) {
    case OracleKind::exact:
      return gmwm_scan(w, set).schedule;
    case OracleKind::uniform:
      return static_cast<std::size_t>(rng.uniform_below(set.size()));
    case OracleKind::noisy_oracle:
      if (rng.bernoulli(params.delta)) return gmwm_scan(w, set).schedule;
      return static_cast<std::size_t>(rng.uniform_below(set.size()));
    case OracleKind::greedy_matching:
      if (set.model.kappa != 1)
        throw UnsupportedKindError(
            "greedy_matching supports the node-exclusive model only");
      return greedy_matching_candidate(w, set);
  }
  throw UnsupportedKindError("unknown oracle kind");
}

}  // namespace detail

// Draws a candidate schedule I^r from the configured oracle.
inline std::size_t algorithm_a_sample(const PolicyParams& params,
                                      const QueueVector& x,
                                      const ChannelState& s,
                                      const ScheduleSet& set,
                                      const ChannelModel& model, Rng& rng) {
  params.validate();
  if (x.size() != s.size() || static_cast<int>(x.size()) != set.link_count())
    throw LengthMismatchError("algorithm_a_sample: length mismatch");
  std::vector<double> w(x.size());
  detail::fill_link_weights(x, s, model, w);
  return detail::sample_candidate(params, w, set, rng);
}

namespace detail {

inline double phi_from_values(double v_cand, double v_prev, double alpha,
                              double norm_x) {
  if (norm_x == 0.0) return 0.0;
  return (v_cand - v_prev) / (std::max(v_cand, v_prev) + alpha * norm_x);
}

}  // namespace detail

// Normalized improvement of the candidate rate vector over the incumbent:
// X.(d_cand - d_prev) / (max(X.d_cand, X.d_prev) + alpha*||X||), and 0 when
// X = 0. Lies in (-1, 1) and is invariant under scaling of X.
inline double phi(const QueueVector& x, const RateVector& d_cand,
                  const RateVector& d_prev, double alpha) {
  if (d_cand.size() != x.size() || d_prev.size() != x.size())
    throw LengthMismatchError("phi: length mismatch");
  if (!(alpha > 0.0)) throw ConfigError("phi: alpha must be > 0");
  if (is_zero(x)) return 0.0;
  return detail::phi_from_values(dot(x, d_cand), dot(x, d_prev), alpha,
                                 euclidean_norm(x));
}

// Switching probability: 1 for phi >= rho, 0 for phi <= -rho, linear in
// between. The negative side is mirrored so f(x) + f(-x) sums to 1 exactly
// in floating point.
inline double f_update_prob(double phi_val, double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw ConfigError("f_update_prob: rho must be in (0, 1)");
  if (phi_val >= rho) return 1.0;
  if (phi_val <= -rho) return 0.0;
  if (phi_val < 0.0) return 1.0 - (0.5 + (-phi_val) / (2.0 * rho));
  return 0.5 + phi_val / (2.0 * rho);
}

struct LmrspState {
  std::size_t previous_schedule = 0;  // canonical index of I(t-1)
};

struct StepDiagnostics {
  std::size_t candidate = 0;   // I^r(t)
  double phi = 0.0;
  double accept_prob = 0.0;    // f(phi)
  bool accepted = false;
  std::size_t chosen = 0;      // I(t)
};

// Initial slot: the schedule comes straight from the oracle, no comparison.
inline LmrspState lmrsp_init(const PolicyParams& params, const QueueVector& x,
                             const ChannelState& s, const ScheduleSet& set,
                             const ChannelModel& model, Rng& rng) {
  return LmrspState{algorithm_a_sample(params, x, s, set, model, rng)};
}

// One policy step. Draw order: candidate sample first, then one switching
// coin (drawn even when f is 0 or 1, keeping streams aligned).
inline StepDiagnostics lmrsp_step(LmrspState& state, const PolicyParams& params,
                                  const QueueVector& x, const ChannelState& s,
                                  const ScheduleSet& set,
                                  const ChannelModel& model, Rng& rng) {
  std::vector<double> w(x.size());
  detail::fill_link_weights(x, s, model, w);

  StepDiagnostics diag;
  diag.candidate = detail::sample_candidate(params, w, set, rng);
  const double v_cand = detail::schedule_value(w, set.active_links[diag.candidate]);
  const double v_prev =
      detail::schedule_value(w, set.active_links[state.previous_schedule]);
  diag.phi = detail::phi_from_values(v_cand, v_prev, params.alpha,
                                     euclidean_norm(x));
  diag.accept_prob = f_update_prob(diag.phi, params.rho);
  diag.accepted = rng.uniform01() < diag.accept_prob;
  diag.chosen = diag.accepted ? diag.candidate : state.previous_schedule;
  state.previous_schedule = diag.chosen;
  return diag;
}

}  // namespace lmrsp
