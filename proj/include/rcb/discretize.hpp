#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "rcb/env.hpp"
#include "rcb/policy.hpp"

namespace rcb {

/// Contextual sales rates S(p|x), piecewise linear in p on [0, 1].
struct PricingModel {
  std::vector<double> context_probs;
  double lipschitz = 1.0;
  /// breakpoints[x] lists (p, S) sorted by p, starting at p = 0 and ending at p = 1.
  std::vector<std::vector<std::pair<double, double>>> breakpoints;

  std::size_t n_contexts() const { return context_probs.size(); }
  double sales(std::size_t context, double price) const;
};

/// Every broken model invariant (range, monotonicity, Lipschitz); empty if valid.
std::vector<std::string> pricing_model_violations(const PricingModel& model);
/// Throws UsageError listing the violations.
void require_valid_model(const PricingModel& model);

struct PricePolicy {
  std::vector<double> prices;  // one per context
};

/// Largest multiple of eps not above p. Never exceeds p even when k * eps
/// rounds up in floating point.
double round_down_price(double p, double eps);
/// k such that round_down_price(p, eps) is the k-th grid point.
std::size_t grid_index(double p, double eps);
/// {0, eps, 2 eps, ..., floor(1/eps) eps}.
std::vector<double> price_grid(double eps);

/// Applies the round-down coordinate-wise and drops duplicates (compared by
/// grid index), keeping first occurrences in input order.
std::vector<PricePolicy> discretize_policy_set(const std::vector<PricePolicy>& policies, double eps);

struct EpsilonChoice {
  double eps = 1.0;
  bool clamped = false;
};
/// (BL)^{-2/5} T^{-1/5} ln(T n)^{3/5}, clamped into (0, 1].
EpsilonChoice epsilon_star(double budget, double lipschitz, double horizon, std::size_t n_policies);
/// (2 eps B L / T)^{1/3}.
double delta_of_eps(double eps, double budget, double lipschitz, double horizon);

/// Finite instance over the given prices: action 0 is "no offer", action
/// k + 1 offers prices[k]. A sale at price p yields reward p and one unit of
/// inventory. Budgets are {T, min(B, T)}.
Instance pricing_to_instance(const PricingModel& model, const std::vector<double>& prices, double budget,
                             std::size_t horizon);

/// Maps each policy onto actions of pricing_to_instance(model, prices, ...).
/// Throws UsageError if a policy price is not in `prices` (within 1e-12).
PolicySet price_policies_to_set(const std::vector<PricePolicy>& policies, const std::vector<double>& prices);

/// Sorted distinct prices used by any policy.
std::vector<double> distinct_prices(const std::vector<PricePolicy>& policies);

/// S(pi) = E_x S(pi(x)|x) and r(pi) = E_x pi(x) S(pi(x)|x).
double sales_of(const PricingModel& model, const PricePolicy& pi);
double revenue_of(const PricingModel& model, const PricePolicy& pi);

/// Expected-outcomes tuple from the closed forms, null policy appended last.
/// Resource 0 is time (consumption 1), resource 1 is inventory.
EOTuple analytic_mu(const PricingModel& model, const std::vector<PricePolicy>& policies);

/// LPOPT of a price-policy set (null policy included) from analytic_mu.
double pricing_lpopt(const PricingModel& model, const std::vector<PricePolicy>& policies, double budget,
                     std::size_t horizon);

struct DiscretizationReport {
  double eps = 0.0;
  double delta = 0.0;
  double budget = 0.0;  // min(B, T)
  std::size_t n_policies = 0;
  std::size_t n_discretized = 0;
  std::size_t n_phi = 0;

  double lpopt_pi = 0.0;
  double lpopt_eps = 0.0;
  double lpopt_phi = 0.0;

  bool p1_ok = true;          // S(pi_eps) >= S(pi), exactly
  bool coupling_ok = true;    // S(pi|x) <= S(pi_eps|x) <= S(pi|x) + eps L per context
  bool p2_ok = true;          // ratio loss <= eps (1 + L / delta^2) on Phi_delta
  bool phi_gap_ok = true;     // LPOPT(Pi) - LPOPT(Phi_delta) <= delta T
  bool eps_gap_ok = true;     // LPOPT(Pi) - LPOPT(Pi_eps) <= 2 delta T + 2 eps B
  bool lemma1_ok = true;      // LPOPT(Phi_delta) - LPOPT(Pi_eps) <= 2 eps (1 + L/delta^2) B; reported only
  bool grid_matches_analytic = true;  // grid-instance LPOPT(Pi_eps) vs analytic, within 1e-9

  bool ok() const { return p1_ok && coupling_ok && p2_ok && phi_gap_ok && eps_gap_ok; }
};

/// Numerically checks the discretization-error bounds. Throws UsageError on
/// an invalid model before any check runs.
DiscretizationReport check_discretization_bounds(const PricingModel& model,
                                                 const std::vector<PricePolicy>& policies, double eps,
                                                 double budget, std::size_t horizon);

/// T^{3/5} B^{1/5} (L ln(T n))^{1/5} with the O(.) constant taken as 1.
double discretization_regret_bound(double horizon, double budget, double lipschitz, std::size_t n_policies);

}  // namespace rcb
