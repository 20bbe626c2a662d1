#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rcb/env.hpp"
#include "rcb/policy.hpp"
#include "rcb/rng.hpp"

namespace rcb {

struct MixtureElimConfig {
  /// C_rad = c0 * ln(d * T * |Pi|).
  double c0 = 1.0;
  /// Number of expected-outcomes tuples sampled per round to approximate the
  /// potentially LP-perfect set (midpoint and both corners included).
  std::size_t samples_m = 64;
  double balance_tol = 1e-6;
  std::size_t balance_max_iters = 2000;
  /// Replaces the default noise probability; must lie in [0, 1/2].
  std::optional<double> q0_override;
  bool keep_trajectory = true;
};

/// min(1/2, sqrt((K/T) ln(K T |Pi|))).
double noise_prob(std::size_t n_actions, std::size_t horizon, std::size_t n_policies);

/// sqrt(c_rad * nu / t); infinite when nu is infinite.
double confidence_radius(double t, double nu, double c_rad);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
};

/// Per-policy intervals for r(pi) and every c_i(pi).
struct ConfidenceBoxes {
  std::vector<Interval> reward;
  std::vector<std::vector<Interval>> consumption;  // [policy][resource]
  /// Coordinates known exactly (time, and everything about the null policy).
  std::vector<std::vector<bool>> fixed_consumption;
  std::vector<bool> fixed_reward;
};

/// The law actually used to draw the played action.
struct Propensity {
  std::size_t action = 0;
  double prob = 0.0;         // P'(action | x)
  std::vector<double> dist;  // P'(. | x) = (1 - q0) P(. | x) + q0 / K
};

/// Per-policy inverse-propensity increments for one round.
struct IpsIncrement {
  std::vector<double> reward;
  std::vector<std::vector<double>> consumption;
};

struct AlgState {
  PolicySet policies;
  std::vector<double> context_probs;
  std::vector<double> budgets;
  std::size_t n_actions = 0;
  std::size_t horizon = 0;
  double q0 = 0.0;
  double c_rad = 0.0;
  MixtureElimConfig config;

  std::size_t round = 1;       // index of the round about to be played
  std::size_t n_observed = 0;  // rounds whose estimates are in the sums
  ConfidenceBoxes boxes;
  std::vector<double> ips_reward_sum;
  std::vector<std::vector<double>> ips_consumption_sum;
  std::vector<double> alpha;  // non-increasing over rounds, starts at 1
  std::vector<double> cumulative_consumption;
  double cumulative_reward = 0.0;
  std::size_t clean_violations = 0;
};

AlgState init_state(const Instance& inst, const PolicySet& policies, const MixtureElimConfig& config);

/// Unbiased inverse-propensity increments. Throws IntegrityError if the
/// recorded propensity is below the noise floor q0 / K.
IpsIncrement ips_estimates(std::size_t context, std::size_t action, const RoundOutcome& outcome,
                           const Propensity& prop, const PolicySet& policies, double q0);

/// Adds one round of increments to the running sums.
void accumulate_estimates(AlgState& state, const IpsIncrement& inc);

/// Intersects every box with [avg - rad, avg + rad] clipped to [0, 1], where
/// avg averages the n_observed rounds so far and rad = rad_{n+1}(K / alpha).
/// Empty intersections collapse to the nearest endpoint of the old interval
/// and are counted in clean_violations. Returns false iff that happened.
bool update_confidence(AlgState& state);

/// Vertices of the sampled potentially LP-perfect set: LP-perfect mixtures
/// for M tuples drawn from the boxes, deduplicated. Throws SolverFailure only
/// if every sample fails.
std::vector<PolicyMixture> build_potential_set(const AlgState& state, Rng& rng);

/// alpha_pi = max over vertices of P(pi), clamped to `previous` when given.
std::vector<double> compute_alpha(std::span<const PolicyMixture> vertices, std::size_t n_policies,
                                  std::span<const double> previous = {});

/// E_x[1 / ((1-q0) P(pi(x)|x) + q0/K)] for each policy.
std::vector<double> inverse_propensity_load(const PolicyMixture& mix, const PolicySet& policies,
                                            std::span<const double> context_probs, double q0);

/// max over policies with alpha > 0 of load - 2K/alpha (<= 0 when balanced);
/// -infinity when no constraint is active.
double balance_violation(const PolicyMixture& mix, std::span<const double> alpha, double q0,
                         std::span<const double> context_probs, const PolicySet& policies);

struct BalanceResult {
  PolicyMixture mixture;
  std::size_t iterations = 0;
  double max_violation = 0.0;
};

/// Finds a mixture in the convex hull of `vertices` satisfying
///   E_x[1 / ((1-q0) P(pi(x)|x) + q0/K)] <= 2K / alpha_pi + tol
/// for every policy with alpha_pi > 0.
///
/// Fictitious play: the constraint player keeps multiplicative weights Z
/// over policies; the mixture player best-responds with sum_pi Z(pi) beta_pi,
/// where beta_pi is the vertex putting the most mass on pi. The running
/// average of best responses is returned as soon as it is feasible; throws
/// BalanceFailure after max_iters.
BalanceResult solve_balanced(std::span<const PolicyMixture> vertices, std::span<const double> alpha,
                             double q0, std::span<const double> context_probs,
                             const PolicySet& policies, double tol, std::size_t max_iters);

/// With probability q0 plays a uniform action, otherwise draws pi from the
/// mixture and plays pi(x).
Propensity select_action(double q0, const PolicyMixture& mix, const PolicySet& policies,
                         std::size_t context, Rng& rng);

struct RoundLog {
  std::size_t context = 0;
  std::size_t action = 0;
  double reward = 0.0;
  double propensity = 0.0;
};

struct RunDiagnostics {
  double q0 = 0.0;
  double c_rad = 0.0;
  std::size_t clean_violations = 0;
  std::size_t coverage_checks = 0;
  std::size_t coverage_misses = 0;
  std::size_t potential_set_failures = 0;
  std::size_t max_balance_iterations = 0;
  double max_balance_violation = 0.0;  // recheck of the returned mixture
  std::vector<std::size_t> balance_iterations;  // per round
  std::vector<double> balance_violations;       // per round
  std::vector<std::size_t> potential_set_sizes; // per round
  bool alpha_monotone = true;
  bool boxes_nested = true;
  double min_propensity_ratio = 1.0;  // min over rounds of P'(a|x) / (q0/K), inf if q0 = 0

  double coverage_miss_rate() const {
    return coverage_checks == 0 ? 0.0 : static_cast<double>(coverage_misses) / coverage_checks;
  }
};

struct RunRecord {
  std::vector<RoundLog> trajectory;
  /// First round in which some budget was exceeded; horizon + 1 if none.
  std::size_t tau = 0;
  /// Sum of rewards over rounds 1 .. tau - 1.
  double total_reward = 0.0;
  std::vector<double> final_consumption;
  RunDiagnostics diagnostics;
};

/// True iff cumulative consumption exceeds some budget.
bool budget_exceeded(std::span<const double> cumulative, std::span<const double> budgets);

/// One episode of MixtureElimination.
RunRecord run_episode(const Instance& inst, const PolicySet& policies, const MixtureElimConfig& config,
                      Rng& rng);

}  // namespace rcb
