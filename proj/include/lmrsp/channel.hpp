#pragma once

// Two-state (good/bad) channel process. Each link flips state independently
// with probability r per slot; the frozen kind models the time-invariant
// limit by pinning the state. The per-link chain is symmetric, so the
// stationary law is uniform over the 2^N state vectors.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace lmrsp {

enum class ChannelKind { two_state_markov, frozen };

using ChannelState = std::vector<std::uint8_t>;  // 1 = good, 0 = bad

struct ChannelModel {
  ChannelKind kind = ChannelKind::two_state_markov;
  double r = 0.0;                        // per-link flip probability
  std::vector<double> good_rates;        // packets/slot in the good state
  ChannelState frozen_state;             // used by the frozen kind

  int link_count() const { return static_cast<int>(good_rates.size()); }

  void validate() const {
    if (good_rates.empty()) throw ConfigError("channel: good_rates empty");
    for (double g : good_rates)
      if (!(g > 0.0) || !std::isfinite(g))
        throw ConfigError("channel: good rates must be positive and finite");
    if (kind == ChannelKind::two_state_markov) {
      if (!(r >= 0.0 && r <= 1.0))
        throw InvalidRateError("channel: r must be in [0, 1]");
    } else {
      if (frozen_state.size() != good_rates.size())
        throw LengthMismatchError("channel: frozen state length mismatch");
    }
  }
};

inline std::uint32_t channel_state_mask(const ChannelState& s) {
  std::uint32_t m = 0;
  for (std::size_t l = 0; l < s.size(); ++l)
    if (s[l]) m |= (1u << l);
  return m;
}

inline ChannelState channel_state_from_mask(int link_count, std::uint32_t mask) {
  ChannelState s(link_count, 0);
  for (int l = 0; l < link_count; ++l)
    if (mask & (1u << l)) s[l] = 1;
  return s;
}

// Starting state: the stationary law for the Markov kind (fair coin per
// link), the pinned state for the frozen kind. Draws by link index.
inline ChannelState initial_state(const ChannelModel& model, Rng& rng) {
  if (model.kind == ChannelKind::frozen) return model.frozen_state;
  ChannelState s(model.link_count());
  for (auto& bit : s) bit = rng.bernoulli(0.5) ? 1 : 0;
  return s;
}

// One uniform draw per link, in link order, even when r makes the outcome
// certain; this keeps streams aligned across configurations.
inline void step_channel_inplace(const ChannelModel& model, ChannelState& state,
                                 Rng& rng) {
  if (static_cast<int>(state.size()) != model.link_count())
    throw LengthMismatchError("channel state length mismatch");
  if (model.kind == ChannelKind::frozen) return;
  for (auto& bit : state)
    if (rng.bernoulli(model.r)) bit = bit ? 0 : 1;
}

inline ChannelState step_channel(const ChannelModel& model,
                                 const ChannelState& state, Rng& rng) {
  ChannelState next = state;
  step_channel_inplace(model, next, rng);
  return next;
}

inline double steady_state_prob(const ChannelModel& model,
                                const ChannelState& s) {
  if (static_cast<int>(s.size()) != model.link_count())
    throw LengthMismatchError("channel state length mismatch");
  if (model.kind == ChannelKind::frozen)
    return s == model.frozen_state ? 1.0 : 0.0;
  if (!(model.r > 0.0 && model.r < 1.0))
    throw InvalidRateError(
        "steady-state distribution undefined for r outside (0, 1)");
  return std::ldexp(1.0, -model.link_count());
}

// Smallest k0 with (1 - beta_l)^k0 <= 1/(4N), where beta_l = 2r for r < 0.5
// and 2 - 2r otherwise. k0 = 1 when r = 0.5 (one-step mixing).
inline int mixing_horizon(int link_count, double r) {
  if (link_count < 1) throw ConfigError("mixing_horizon: link count < 1");
  if (!(r > 0.0 && r < 1.0))
    throw InvalidRateError("mixing_horizon: r must be in (0, 1)");
  if (r == 0.5) return 1;
  const double beta = r < 0.5 ? 2.0 * r : 2.0 - 2.0 * r;
  const double target = 1.0 / (4.0 * link_count);
  int k0 = static_cast<int>(
      std::ceil(std::log(4.0 * link_count) / -std::log1p(-beta)));
  if (k0 < 1) k0 = 1;
  // ceil() of a ratio that lands on an integer can round either way in
  // floating point; nudge until the defining bound actually holds.
  while (std::pow(1.0 - beta, k0) > target) ++k0;
  while (k0 > 1 && std::pow(1.0 - beta, k0 - 1) <= target) --k0;
  return k0;
}

}  // namespace lmrsp
