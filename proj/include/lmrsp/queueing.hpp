#pragma once

// Arrival generation and the queue recursion X' = X + A - D + U with
// explicit wasted-service accounting. Serve-before-arrive: packets that
// arrive in a slot cannot depart in the same slot. Rates are floored at
// service time so queues stay integral.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rates.hpp"
#include "rng.hpp"

namespace lmrsp {

using QueueVector = std::vector<std::int64_t>;

inline double dot(const QueueVector& x, const RateVector& d) {
  double acc = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l)
    acc += static_cast<double>(x[l]) * d[l];
  return acc;
}

inline double euclidean_norm(const QueueVector& x) {
  double acc = 0.0;
  for (std::int64_t v : x) {
    const double d = static_cast<double>(v);
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline bool is_zero(const QueueVector& x) {
  for (std::int64_t v : x)
    if (v != 0) return false;
  return true;
}

enum class ArrivalKind { bernoulli_batch, truncated_poisson };

struct ArrivalModel {
  ArrivalKind kind = ArrivalKind::bernoulli_batch;
  std::vector<double> mean;     // packets/slot per link
  std::int64_t max_per_slot = 1;  // hard cap A_max
  std::int64_t batch_size = 1;    // bernoulli_batch arrival size

  void validate() const {
    if (mean.empty()) throw ConfigError("arrivals: mean vector empty");
    if (max_per_slot < 1) throw ConfigError("arrivals: max_per_slot < 1");
    for (double a : mean) {
      if (!(a >= 0.0) || !std::isfinite(a))
        throw InvalidMeanError("arrivals: mean must be finite and >= 0");
      if (a > static_cast<double>(max_per_slot))
        throw InvalidMeanError("arrivals: mean exceeds max_per_slot");
    }
    if (kind == ArrivalKind::bernoulli_batch) {
      if (batch_size < 1 || batch_size > max_per_slot)
        throw ConfigError("arrivals: batch_size must be in [1, max_per_slot]");
      for (double a : mean)
        if (a > static_cast<double>(batch_size))
          throw InvalidMeanError(
              "arrivals: bernoulli mean exceeds batch size");
    }
  }
};

// Draws per link in link order. bernoulli_batch: a batch of batch_size
// packets with probability mean/batch_size (one draw). truncated_poisson:
// Poisson(mean) resampled on overflow past max_per_slot.
inline std::vector<std::int64_t> sample_arrivals(const ArrivalModel& model,
                                                 Rng& rng) {
  std::vector<std::int64_t> out(model.mean.size(), 0);
  for (std::size_t l = 0; l < model.mean.size(); ++l) {
    const double a = model.mean[l];
    if (model.kind == ArrivalKind::bernoulli_batch) {
      const double p = a / static_cast<double>(model.batch_size);
      out[l] = rng.bernoulli(p) ? model.batch_size : 0;
    } else {
      if (a == 0.0) continue;
      std::int64_t k;
      do {
        k = rng.poisson(a);
      } while (k > model.max_per_slot);
      out[l] = k;
    }
  }
  return out;
}

struct QueueStepResult {
  QueueVector next;
  std::vector<std::int64_t> wasted;
};

namespace detail {

inline void queue_step_inplace(QueueVector& x,
                               const std::vector<std::int64_t>& arrivals,
                               const RateVector& rates,
                               std::vector<std::int64_t>& wasted) {
  for (std::size_t l = 0; l < x.size(); ++l) {
    const std::int64_t offered = static_cast<std::int64_t>(rates[l]);
    const std::int64_t served = std::min(x[l], offered);
    wasted[l] = offered - served;
    x[l] = x[l] - served + arrivals[l];
  }
}

}  // namespace detail

inline QueueStepResult queue_step(const QueueVector& x,
                                  const std::vector<std::int64_t>& arrivals,
                                  const RateVector& rates) {
  if (arrivals.size() != x.size() || rates.size() != x.size())
    throw LengthMismatchError("queue_step: length mismatch");
  for (std::size_t l = 0; l < x.size(); ++l) {
    if (arrivals[l] < 0) throw ConfigError("queue_step: negative arrival");
    if (rates[l] < 0.0) throw ConfigError("queue_step: negative rate");
  }
  QueueStepResult res{x, std::vector<std::int64_t>(x.size(), 0)};
  detail::queue_step_inplace(res.next, arrivals, rates, res.wasted);
  return res;
}

}  // namespace lmrsp
