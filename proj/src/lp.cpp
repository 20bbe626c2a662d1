#include "rcb/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rcb/error.hpp"

namespace rcb {

namespace {

constexpr double kPivotTol = 1e-12;
constexpr double kReducedCostTol = 1e-11;

}  // namespace

double lp_value(const MixtureStats& stats, std::span<const double> budgets, double horizon) {
  if (stats.reward <= 0.0) return 0.0;
  double cap = horizon;
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    const double c = stats.consumption[i];
    if (c > 0.0) cap = std::min(cap, budgets[i] / c);
  }
  return stats.reward * cap;
}

double lp_value(const PolicyMixture& mix, const EOTuple& mu, std::span<const double> budgets,
                double horizon) {
  return lp_value(mixture_stats(mix, mu), budgets, horizon);
}

LpSolution solve_lpopt(const EOTuple& mu, std::span<const double> budgets, double horizon,
                       std::size_t null_index, std::size_t max_iters) {
  const std::size_t n = mu.n_policies();
  const std::size_t m = budgets.size();
  if (null_index >= n) throw UsageError("solve_lpopt: null policy missing from mu");
  if (mu.n_resources() != m) throw UsageError("solve_lpopt: budget/resource count mismatch");

  // Rows 0..m-1 are constraints, row m is the reduced-cost row.
  const std::size_t cols = n + m + 1;
  const std::size_t rhs = n + m;
  std::vector<double> tab((m + 1) * cols, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return tab[r * cols + c]; };

  for (std::size_t i = 0; i < m; ++i) {
    if (budgets[i] < 0.0) throw UsageError("solve_lpopt: negative budget");
    for (std::size_t p = 0; p < n; ++p) at(i, p) = mu.consumption[p][i];
    at(i, n + i) = 1.0;
    at(i, rhs) = budgets[i];
  }
  for (std::size_t p = 0; p < n; ++p) at(m, p) = mu.reward[p];

  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

  double best = 0.0;
  std::size_t iter = 0;
  for (;; ++iter) {
    // Bland: lowest-index column with positive reduced cost enters.
    std::size_t enter = cols;
    for (std::size_t j = 0; j < n + m; ++j) {
      if (at(m, j) > kReducedCostTol) {
        enter = j;
        break;
      }
    }
    if (enter == cols) break;
    if (iter >= max_iters) {
      throw SolverFailure("solve_lpopt: iteration cap " + std::to_string(max_iters) + " reached", best);
    }

    std::size_t leave = m;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const double a = at(i, enter);
      if (a <= kPivotTol) continue;
      const double ratio = at(i, rhs) / a;
      const bool tie = leave < m && std::abs(ratio - best_ratio) <= 1e-12;
      if ((!tie && ratio < best_ratio) || (tie && basis[i] < basis[leave])) {
        best_ratio = std::min(ratio, best_ratio);
        leave = i;
      }
    }
    // Time bounds every column with c_0 > 0; an unbounded ray means a policy
    // with zero time consumption, which only a malformed mu can produce.
    if (leave == m) throw UsageError("solve_lpopt: unbounded (a policy consumes no time)");

    const double piv = at(leave, enter);
    for (std::size_t c = 0; c < cols; ++c) at(leave, c) /= piv;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double f = at(r, enter);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < cols; ++c) at(r, c) -= f * at(leave, c);
      at(r, enter) = 0.0;
    }
    basis[leave] = enter;
    best = std::max(best, -at(m, rhs));
  }

  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) y[basis[i]] = std::max(0.0, at(i, rhs));
  }

  LpSolution sol;
  sol.iterations = iter;
  for (std::size_t p = 0; p < n; ++p) {
    sol.value += y[p] * mu.reward[p];
    sol.t_star += y[p];
  }
  sol.t_star = std::min(sol.t_star, horizon);
  if (sol.t_star > 0.0) {
    std::vector<PolicyMixture::Entry> entries;
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) total += y[p];
    for (std::size_t p = 0; p < n; ++p) {
      if (y[p] > 0.0) entries.emplace_back(p, y[p] / total);
    }
    sol.mixture = PolicyMixture::from_entries(std::move(entries));
  } else {
    sol.mixture = PolicyMixture::point_mass(null_index);
  }
  return sol;
}

PolicyMixture make_lp_perfect(const LpSolution& sol, double horizon, std::size_t null_index) {
  if (sol.t_star <= 0.0) return PolicyMixture::point_mass(null_index);
  // A saturated horizon can come back a few ulps short; mixing in a 1e-16
  // null weight would only grow the support.
  if (sol.t_star >= horizon * (1.0 - 1e-12)) return sol.mixture;
  // Spread y over the full horizon; the unused time goes to the null policy.
  const double theta = sol.t_star / horizon;
  return blend(theta, sol.mixture, PolicyMixture::point_mass(null_index));
}

LpPerfectCheck check_lp_perfect(const PolicyMixture& mix, const EOTuple& mu,
                                std::span<const double> budgets, double horizon, double lpopt,
                                double tol) {
  LpPerfectCheck out;
  out.support_ok = mix.support_size() <= budgets.size();
  const auto stats = mixture_stats(mix, mu);
  out.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    out.max_excess = std::max(out.max_excess, stats.consumption[i] - budgets[i] / horizon);
  }
  out.consumption_ok = out.max_excess <= tol;
  out.value_gap = std::abs(lp_value(stats, budgets, horizon) - lpopt);
  out.value_ok = out.value_gap <= tol;
  return out;
}

bool check_sandwich(std::span<const PolicyMixture> vertices, const PolicyMixture& hull_point,
                    const EOTuple& mu, std::span<const double> budgets, double horizon,
                    SandwichSide side) {
  if (vertices.empty()) throw UsageError("check_sandwich: no vertices");
  constexpr double slack = 1e-9;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) {
    const double val = lp_value(v, mu, budgets, horizon);
    lo = std::min(lo, val);
    hi = std::max(hi, val);
  }
  const double val = lp_value(hull_point, mu, budgets, horizon);
  if (lo > val + slack) return false;
  if (side == SandwichSide::both && val > hi + slack) return false;
  return true;
}

}  // namespace rcb
