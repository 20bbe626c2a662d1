#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rcb/policy.hpp"
#include "rcb/rng.hpp"

namespace rcb {

/// One support point of the joint (reward, consumption) law of an action in
/// a context.
struct OutcomeTriple {
  double reward = 0.0;
  std::vector<double> consumption;  // one entry per resource, index 0 is time
  double prob = 0.0;
};

struct RoundOutcome {
  double reward = 0.0;
  std::vector<double> consumption;
};

/// Finite contextual bandit environment with d budgeted resources.
///
/// Resource 0 is time: every outcome consumes budgets[0] / horizon of it
/// deterministically, which is 1 for an un-normalized instance.
struct Instance {
  std::vector<double> context_probs;
  std::size_t n_actions = 0;
  std::size_t null_action = 0;
  std::vector<double> budgets;
  std::size_t horizon = 0;
  /// outcomes[context][action] is a finite distribution over outcome triples.
  std::vector<std::vector<std::vector<OutcomeTriple>>> outcomes;

  std::size_t n_contexts() const { return context_probs.size(); }
  std::size_t n_resources() const { return budgets.size(); }
  double time_consumption() const { return budgets.at(0) / static_cast<double>(horizon); }
  double min_budget() const;
};

struct Violation {
  std::string location;
  std::string message;
};

/// Every violated instance invariant, with location. Empty means valid.
std::vector<Violation> validate_instance(const Instance& inst);

std::size_t sample_context(const Instance& inst, Rng& rng);

/// Draws one outcome for (context, action). Throws UsageError on bad indices.
RoundOutcome sample_round(const Instance& inst, std::size_t context, std::size_t action, Rng& rng);

/// Exact r(pi) and c_i(pi) by summation over contexts and outcome supports.
EOTuple expected_outcomes(const Instance& inst, const PolicySet& policies);

/// Uniform-budget reduction: every budget becomes B = min_i B_i and
/// consumption of resource i is scaled by B / B_i.
Instance normalize_budgets(const Instance& inst);

/// Which member of the lower-bound family to build: the all-zero instance
/// or the instance rewarding arm i on context j (both 1-based).
struct LowerBoundZero {};
struct LowerBoundCell {
  std::size_t arm;
  std::size_t context;
};
using LowerBoundVariant = std::variant<LowerBoundZero, LowerBoundCell>;

/// Lower-bound family: T/B uniform contexts, arm a_1 (index 0, the null
/// action) is free, every other arm costs 1 unit of the single budgeted
/// resource. The policy set holds pi_{i,j} for 2 <= i <= K, 1 <= j <= T/B
/// (ordered by i then j) plus the null policy. With `enforce_regime`, also
/// requires B <= sqrt(K T) / 2.
std::pair<Instance, PolicySet> gen_lower_bound_instance(std::size_t n_arms, std::size_t horizon,
                                                        std::size_t budget, LowerBoundVariant variant,
                                                        bool enforce_regime = false);

/// Index of pi_{i,j} inside the policy set returned above.
std::size_t lower_bound_policy_index(std::size_t n_arms, std::size_t horizon, std::size_t budget,
                                     std::size_t arm, std::size_t context);

/// Dynamic procurement: action 0 is "no offer", action k >= 1 offers
/// prices[k-1]. An accepted offer yields (reward 1, money p), otherwise
/// (0, 0). accept_probs is indexed [context][price].
Instance gen_procurement_instance(const std::vector<double>& prices,
                                  const std::vector<std::vector<double>>& accept_probs,
                                  double budget, const std::vector<double>& context_probs,
                                  std::size_t horizon);

}  // namespace rcb
