#pragma once

#include <cstddef>
#include <vector>

#include "rcb/env.hpp"
#include "rcb/policy.hpp"

namespace rcb {

/// Exact OPT(Pi) by backward induction over (round, remaining budgets).
///
/// Every non-time consumption value must be an integer and every budget
/// integral; (T+1) * prod_i (B_i + 1) must not exceed `max_states`. A
/// transition that overdraws a budget earns nothing and ends the episode.
/// Throws UsageError when a precondition fails.
double dp_opt(const Instance& inst, const PolicySet& policies, std::size_t max_states = 10'000'000);

/// True iff dp_opt's preconditions hold.
bool dp_applicable(const Instance& inst, std::size_t max_states = 10'000'000);

/// Max LP-value over mixtures with support <= d whose weights are multiples
/// of `resolution`. Exponential in d; intended for a handful of policies.
double grid_lpopt(const EOTuple& mu, const std::vector<double>& budgets, double horizon, double resolution);

struct EstimatorMean {
  double reward = 0.0;
  std::vector<double> consumption;
};

/// Exact expectation of the inverse-propensity increment for `policy` when
/// actions are drawn from the noisy law (1 - q0) P(.|x) + q0/K induced by
/// `mix`, summing over contexts, actions and outcome supports.
EstimatorMean enumerate_estimator_mean(const Instance& inst, const PolicySet& policies,
                                       const PolicyMixture& mix, double q0, std::size_t policy);

}  // namespace rcb
