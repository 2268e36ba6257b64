#pragma once

// Dense two-phase primal simplex with Bland's rule. Sized for the small
// capacity-region feasibility problems here (tens of rows); not a general
// purpose solver.

#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace lmrsp::lp {

enum class Sense : char { eq, le, ge };

struct Constraint {
  std::vector<double> coeff;
  Sense sense = Sense::eq;
  double rhs = 0.0;
};

enum class Status { optimal, infeasible, unbounded };

struct Solution {
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

namespace detail {

struct Tableau {
  std::size_t rows = 0, cols = 0;       // cols excludes the rhs column
  std::vector<std::vector<double>> t;   // rows x (cols + 1)
  std::vector<double> cost;             // cols + 1; last entry = -objective
  std::vector<std::size_t> basis;       // basic column per row
  std::vector<bool> banned;             // columns barred from entering

  void pivot(std::size_t pr, std::size_t pc) {
    auto& prow = t[pr];
    const double inv = 1.0 / prow[pc];
    for (auto& v : prow) v *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == pr) continue;
      const double factor = t[i][pc];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= cols; ++j) t[i][j] -= factor * prow[j];
    }
    const double cf = cost[pc];
    if (cf != 0.0)
      for (std::size_t j = 0; j <= cols; ++j) cost[j] -= cf * prow[j];
    basis[pr] = pc;
  }

  // Returns Status::optimal when no entering column remains.
  Status iterate(double tol) {
    const std::size_t max_iters = 2000 + 200 * (rows + cols);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
      // Bland: lowest-index column with negative reduced cost.
      std::size_t enter = cols;
      for (std::size_t j = 0; j < cols; ++j) {
        if (!banned[j] && cost[j] < -tol) {
          enter = j;
          break;
        }
      }
      if (enter == cols) return Status::optimal;
      std::size_t leave = rows;
      double best_ratio = 0.0;
      for (std::size_t i = 0; i < rows; ++i) {
        if (t[i][enter] <= tol) continue;
        const double ratio = t[i][cols] / t[i][enter];
        if (leave == rows || ratio < best_ratio - tol ||
            (ratio < best_ratio + tol && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave == rows) return Status::unbounded;
      pivot(leave, enter);
    }
    throw Error("simplex: iteration limit exceeded");
  }
};

}  // namespace detail

// minimize c.x subject to the constraints, x >= 0.
inline Solution minimize(const std::vector<double>& c,
                         const std::vector<Constraint>& rows,
                         double tol = 1e-9) {
  const std::size_t n = c.size();
  const std::size_t m = rows.size();
  for (const auto& row : rows)
    if (row.coeff.size() != n) throw LengthMismatchError("lp: row length");

  // Normalize to nonnegative rhs, count slack/artificial columns.
  std::vector<std::vector<double>> a(m, std::vector<double>(n));
  std::vector<double> b(m);
  std::vector<Sense> sense(m);
  for (std::size_t i = 0; i < m; ++i) {
    a[i] = rows[i].coeff;
    b[i] = rows[i].rhs;
    sense[i] = rows[i].sense;
    if (b[i] < 0.0) {
      for (auto& v : a[i]) v = -v;
      b[i] = -b[i];
      if (sense[i] == Sense::le) sense[i] = Sense::ge;
      else if (sense[i] == Sense::ge) sense[i] = Sense::le;
    }
  }
  std::size_t n_slack = 0, n_art = 0;
  for (auto s : sense) {
    if (s != Sense::eq) ++n_slack;
    if (s != Sense::le) ++n_art;
  }

  detail::Tableau tb;
  tb.rows = m;
  tb.cols = n + n_slack + n_art;
  tb.t.assign(m, std::vector<double>(tb.cols + 1, 0.0));
  tb.cost.assign(tb.cols + 1, 0.0);
  tb.basis.assign(m, 0);
  tb.banned.assign(tb.cols, false);

  std::size_t slack_at = n, art_at = n + n_slack;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) tb.t[i][j] = a[i][j];
    tb.t[i][tb.cols] = b[i];
    if (sense[i] == Sense::le) {
      tb.t[i][slack_at] = 1.0;
      tb.basis[i] = slack_at++;
    } else {
      if (sense[i] == Sense::ge) tb.t[i][slack_at++] = -1.0;  // surplus
      tb.t[i][art_at] = 1.0;
      tb.basis[i] = art_at++;
    }
  }

  // Phase 1: minimize the sum of artificials.
  for (std::size_t j = n + n_slack; j < tb.cols; ++j) tb.cost[j] = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (tb.basis[i] >= n + n_slack)
      for (std::size_t j = 0; j <= tb.cols; ++j) tb.cost[j] -= tb.t[i][j];
  }
  if (tb.iterate(tol) != Status::optimal)
    throw Error("simplex: phase 1 unbounded");
  const double phase1 = -tb.cost[tb.cols];
  Solution sol;
  if (phase1 > 1e-7) {
    sol.status = Status::infeasible;
    return sol;
  }
  // Bar artificials from re-entering; pivot basic ones out where possible.
  for (std::size_t j = n + n_slack; j < tb.cols; ++j) tb.banned[j] = true;
  for (std::size_t i = 0; i < m; ++i) {
    if (tb.basis[i] < n + n_slack) continue;
    for (std::size_t j = 0; j < n + n_slack; ++j) {
      if (std::fabs(tb.t[i][j]) > tol) {
        tb.pivot(i, j);
        break;
      }
    }
  }

  // Phase 2: original objective.
  std::vector<double> full_c(tb.cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) full_c[j] = c[j];
  for (std::size_t j = 0; j <= tb.cols; ++j) tb.cost[j] = j < tb.cols ? full_c[j] : 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double cb = full_c[tb.basis[i]];
    if (cb != 0.0)
      for (std::size_t j = 0; j <= tb.cols; ++j) tb.cost[j] -= cb * tb.t[i][j];
  }
  const Status st = tb.iterate(tol);
  if (st == Status::unbounded) {
    sol.status = Status::unbounded;
    return sol;
  }

  sol.status = Status::optimal;
  sol.objective = -tb.cost[tb.cols];
  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (tb.basis[i] < n) sol.x[tb.basis[i]] = tb.t[i][tb.cols];
  return sol;
}

}  // namespace lmrsp::lp
