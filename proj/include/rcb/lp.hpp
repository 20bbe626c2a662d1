#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rcb/policy.hpp"

namespace rcb {

/// Result of the linear relaxation over policy mixtures.
struct LpSolution {
  double value = 0.0;     // LPOPT
  PolicyMixture mixture;  // y / t*, or the null point mass when t* = 0
  double t_star = 0.0;    // sum of y: total activated time mass
  std::size_t iterations = 0;
};

/// LP-value of a mixture: r(P) * min_i B_i / c_i(P), capped at T. A resource
/// with zero expected consumption imposes no cap; zero reward gives zero.
double lp_value(const MixtureStats& stats, std::span<const double> budgets, double horizon);
double lp_value(const PolicyMixture& mix, const EOTuple& mu, std::span<const double> budgets,
                double horizon);

/// maximize sum_pi y_pi r(pi) s.t. sum_pi y_pi c_i(pi) <= B_i, y >= 0.
///
/// Dense tableau simplex with Bland's rule, starting from the all-slack
/// basis. The optimal basis has at most d nonzero policy weights. Throws
/// SolverFailure when `max_iters` pivots are exceeded.
LpSolution solve_lpopt(const EOTuple& mu, std::span<const double> budgets, double horizon,
                       std::size_t null_index, std::size_t max_iters = 10000);

/// Mixes an LP-optimal solution with the null policy so that per-round
/// consumption of every resource is at most B_i / T while keeping the
/// LP-value and a support of at most d policies.
PolicyMixture make_lp_perfect(const LpSolution& sol, double horizon, std::size_t null_index);

/// Checks the three LP-perfect clauses for `mix` against `mu`.
struct LpPerfectCheck {
  bool support_ok = false;
  bool consumption_ok = false;
  bool value_ok = false;
  double value_gap = 0.0;
  double max_excess = 0.0;  // max_i c_i(P) - B_i/T
  bool ok() const { return support_ok && consumption_ok && value_ok; }
};
LpPerfectCheck check_lp_perfect(const PolicyMixture& mix, const EOTuple& mu,
                                std::span<const double> budgets, double horizon, double lpopt,
                                double tol = 1e-9);

enum class SandwichSide {
  lower,  // min over vertices <= LP(hull point); what quasi-concavity guarantees
  both,   // additionally LP(hull point) <= max over vertices
};

bool check_sandwich(std::span<const PolicyMixture> vertices, const PolicyMixture& hull_point,
                    const EOTuple& mu, std::span<const double> budgets, double horizon,
                    SandwichSide side = SandwichSide::lower);

}  // namespace rcb
