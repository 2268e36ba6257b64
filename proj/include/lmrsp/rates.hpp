#pragma once

// Transmission rates as a function of (channel state, schedule): an active
// link in the good state gets its full configured rate, everything else gets
// zero. Also computes nu, the minimum over links of the steady-state-averaged
// best single-link rate.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "channel.hpp"
#include "errors.hpp"
#include "topology.hpp"

namespace lmrsp {

using RateVector = std::vector<double>;

namespace detail {

inline void fill_rates(const ChannelModel& model, const ChannelState& s,
                       const std::vector<int>& active_links, RateVector& out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int l : active_links)
    if (s[l]) out[l] = model.good_rates[l];
}

}  // namespace detail

inline RateVector rate_vector(const ChannelModel& model, const ChannelState& s,
                              const ScheduleVector& sched,
                              const ScheduleSet& set) {
  if (static_cast<int>(s.size()) != model.link_count() ||
      model.link_count() != set.link_count())
    throw LengthMismatchError("rate_vector: length mismatch");
  if (!set.is_valid(sched))
    throw InvalidScheduleError("rate_vector: schedule violates interference");
  RateVector out(s.size(), 0.0);
  for (std::size_t l = 0; l < s.size(); ++l)
    if (sched.active[l] && s[l]) out[l] = model.good_rates[l];
  return out;
}

inline RateVector rate_vector(const ChannelModel& model, const ChannelState& s,
                              const ScheduleSet& set, std::size_t sched_index) {
  RateVector out(s.size(), 0.0);
  detail::fill_rates(model, s, set.active_links[sched_index], out);
  return out;
}

namespace detail {

// Per-state maximum single-link rate only depends on the link's own state
// and on whether the link appears in any schedule at all.
inline double best_rate(const ChannelModel& model, const ScheduleSet& set,
                        int link, bool good) {
  return (good && set.link_schedulable[link]) ? model.good_rates[link] : 0.0;
}

}  // namespace detail

// Exact sum over the 2^N channel states under the product-form stationary
// law. Kept alongside the closed form as a cross-check path.
inline double nu_exact(const ChannelModel& model, const ScheduleSet& set) {
  const int n = model.link_count();
  if (n > 20) throw SizeLimitError("nu_exact: too many links to enumerate");
  double result = -1.0;
  for (int l = 0; l < n; ++l) {
    double avg = 0.0;
    if (model.kind == ChannelKind::frozen) {
      avg = detail::best_rate(model, set, l, model.frozen_state[l] != 0);
    } else {
      const double pi = std::ldexp(1.0, -n);
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask)
        avg += pi * detail::best_rate(model, set, l, (mask >> l) & 1u);
    }
    if (result < 0.0 || avg < result) result = avg;
  }
  return result;
}

// Closed form: the link is good half the time, and the best schedule for a
// good link always grants its full rate.
inline double nu_closed_form(const ChannelModel& model, const ScheduleSet& set) {
  double result = -1.0;
  for (int l = 0; l < model.link_count(); ++l) {
    double avg;
    if (model.kind == ChannelKind::frozen)
      avg = detail::best_rate(model, set, l, model.frozen_state[l] != 0);
    else
      avg = set.link_schedulable[l] ? 0.5 * model.good_rates[l] : 0.0;
    if (result < 0.0 || avg < result) result = avg;
  }
  return result;
}

inline double nu(const ChannelModel& model, const ScheduleSet& set) {
  model.validate();
  if (model.link_count() != set.link_count())
    throw LengthMismatchError("nu: model/schedule link counts differ");
  if (model.kind == ChannelKind::two_state_markov &&
      !(model.r > 0.0 && model.r < 1.0))
    throw InvalidRateError("nu: stationary law undefined for r outside (0, 1)");
  const double result = model.link_count() <= 20 ? nu_exact(model, set)
                                                 : nu_closed_form(model, set);
  if (!(result > 0.0))
    throw ZeroNuError("nu: some link can never transmit");
  return result;
}

}  // namespace lmrsp
