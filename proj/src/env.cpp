#include "rcb/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rcb/error.hpp"

namespace rcb {

namespace {

constexpr double kProbTol = 1e-12;

std::string cell(std::size_t x, std::size_t a) {
  return "outcomes[" + std::to_string(x) + "][" + std::to_string(a) + "]";
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

double Instance::min_budget() const { return *std::min_element(budgets.begin(), budgets.end()); }

std::vector<Violation> validate_instance(const Instance& inst) {
  std::vector<Violation> out;
  auto add = [&out](std::string loc, std::string msg) { out.push_back({std::move(loc), std::move(msg)}); };

  if (inst.horizon == 0) add("horizon", "horizon must be positive");
  if (inst.n_contexts() == 0) add("contexts", "no contexts");
  if (inst.n_actions == 0) add("actions", "no actions");
  if (inst.null_action >= inst.n_actions) add("null_action", "null action out of range");
  if (inst.budgets.empty()) add("budgets", "no resources (time must be resource 0)");

  double prob_sum = 0.0;
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    if (!in_unit(inst.context_probs[x])) add("contexts[" + std::to_string(x) + "]", "probability outside [0,1]");
    prob_sum += inst.context_probs[x];
  }
  if (inst.n_contexts() > 0 && std::abs(prob_sum - 1.0) > kProbTol) {
    add("contexts", "context_probs sum != 1 (got " + std::to_string(prob_sum) + ")");
  }

  const std::size_t d = inst.n_resources();
  const double T = static_cast<double>(inst.horizon);
  for (std::size_t i = 0; i < d; ++i) {
    const double b = inst.budgets[i];
    const std::string loc = "budgets[" + std::to_string(i) + "]";
    if (i == 0 && !(b > 0.0)) add(loc, "time budget must be positive");
    if (!(b >= 0.0)) add(loc, "budget negative");
    if (b > T) add(loc, "budget exceeds horizon");
  }
  if (out.size() > 0 && (inst.horizon == 0 || inst.budgets.empty())) return out;

  const double time_use = inst.time_consumption();
  if (inst.outcomes.size() != inst.n_contexts()) {
    add("outcomes", "expected one row per context");
    return out;
  }
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    if (inst.outcomes[x].size() != inst.n_actions) {
      add("outcomes[" + std::to_string(x) + "]", "expected one entry per action");
      continue;
    }
    for (std::size_t a = 0; a < inst.n_actions; ++a) {
      const auto& list = inst.outcomes[x][a];
      const std::string loc = cell(x, a);
      if (list.empty()) {
        add(loc, "empty outcome distribution");
        continue;
      }
      double sum = 0.0;
      for (std::size_t k = 0; k < list.size(); ++k) {
        const auto& o = list[k];
        const std::string oloc = loc + "[" + std::to_string(k) + "]";
        if (!in_unit(o.prob)) add(oloc, "probability outside [0,1]");
        sum += o.prob;
        if (!in_unit(o.reward)) add(oloc, "reward outside [0,1]");
        if (o.consumption.size() != d) {
          add(oloc, "consumption vector has wrong length");
          continue;
        }
        for (std::size_t i = 0; i < d; ++i) {
          if (!in_unit(o.consumption[i])) add(oloc, "consumption[" + std::to_string(i) + "] outside [0,1]");
        }
        if (std::abs(o.consumption[0] - time_use) > kProbTol) add(oloc, "time consumption must equal budgets[0]/horizon");
        if (a == inst.null_action && o.prob > 0.0) {
          if (o.reward != 0.0) add(oloc, "null action reward nonzero");
          for (std::size_t i = 1; i < d; ++i) {
            if (o.consumption[i] != 0.0) add(oloc, "null action consumes resource " + std::to_string(i));
          }
        }
      }
      if (std::abs(sum - 1.0) > kProbTol) add(loc, "outcome probabilities sum != 1");
    }
  }
  return out;
}

std::size_t sample_context(const Instance& inst, Rng& rng) { return rng.categorical(inst.context_probs); }

RoundOutcome sample_round(const Instance& inst, std::size_t context, std::size_t action, Rng& rng) {
  if (context >= inst.n_contexts()) throw UsageError("sample_round: context " + std::to_string(context) + " out of range");
  if (action >= inst.n_actions) throw UsageError("sample_round: action " + std::to_string(action) + " out of range");
  const auto& list = inst.outcomes[context][action];
  std::size_t k = 0;
  if (list.size() > 1) {
    const double u = rng.uniform();
    double acc = 0.0;
    k = list.size() - 1;
    for (std::size_t j = 0; j < list.size(); ++j) {
      acc += list[j].prob;
      if (u < acc) {
        k = j;
        break;
      }
    }
    while (list[k].prob <= 0.0 && k > 0) --k;
  }
  return {list[k].reward, list[k].consumption};
}

EOTuple expected_outcomes(const Instance& inst, const PolicySet& policies) {
  if (policies.n_contexts() != inst.n_contexts()) throw UsageError("expected_outcomes: policy/context mismatch");
  const std::size_t d = inst.n_resources();
  EOTuple mu;
  mu.reward.assign(policies.size(), 0.0);
  mu.consumption.assign(policies.size(), std::vector<double>(d, 0.0));
  for (std::size_t p = 0; p < policies.size(); ++p) {
    for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
      const double px = inst.context_probs[x];
      const std::size_t a = policies.action(p, x);
      if (a >= inst.n_actions) throw UsageError("expected_outcomes: policy action out of range");
      for (const auto& o : inst.outcomes[x][a]) {
        const double w = px * o.prob;
        mu.reward[p] += w * o.reward;
        for (std::size_t i = 0; i < d; ++i) mu.consumption[p][i] += w * o.consumption[i];
      }
    }
  }
  return mu;
}

Instance normalize_budgets(const Instance& inst) {
  Instance out = inst;
  const double B = inst.min_budget();
  const double T = static_cast<double>(inst.horizon);
  std::vector<double> scale(inst.n_resources(), 1.0);
  for (std::size_t i = 0; i < inst.n_resources(); ++i) {
    if (inst.budgets[i] != B) scale[i] = B / inst.budgets[i];
    out.budgets[i] = B;
  }
  const bool time_scaled = inst.budgets[0] != B;
  for (auto& row : out.outcomes) {
    for (auto& list : row) {
      for (auto& o : list) {
        for (std::size_t i = 0; i < o.consumption.size(); ++i) {
          if (scale[i] != 1.0) o.consumption[i] *= scale[i];
        }
        // Keep time consumption bit-identical to budgets[0] / horizon.
        if (time_scaled) o.consumption[0] = B / T;
      }
    }
  }
  return out;
}

std::size_t lower_bound_policy_index(std::size_t n_arms, std::size_t horizon, std::size_t budget,
                                     std::size_t arm, std::size_t context) {
  const std::size_t n_ctx = horizon / budget;
  if (arm < 2 || arm > n_arms || context < 1 || context > n_ctx) {
    throw UsageError("lower-bound policy (" + std::to_string(arm) + "," + std::to_string(context) + ") out of range");
  }
  return (arm - 2) * n_ctx + (context - 1);
}

std::pair<Instance, PolicySet> gen_lower_bound_instance(std::size_t n_arms, std::size_t horizon,
                                                        std::size_t budget, LowerBoundVariant variant,
                                                        bool enforce_regime) {
  if (n_arms < 2 || n_arms > horizon) throw UsageError("lower-bound instance: need 2 <= K <= T");
  if (budget == 0 || horizon % budget != 0) throw UsageError("lower-bound instance: B must divide T");
  if (enforce_regime &&
      static_cast<double>(budget) > std::sqrt(static_cast<double>(n_arms) * static_cast<double>(horizon)) / 2.0) {
    throw UsageError("lower-bound instance: B exceeds sqrt(K T)/2");
  }
  const std::size_t n_ctx = horizon / budget;

  std::size_t reward_arm = 0, reward_ctx = 0;
  const bool has_reward = std::holds_alternative<LowerBoundCell>(variant);
  if (has_reward) {
    const auto c = std::get<LowerBoundCell>(variant);
    lower_bound_policy_index(n_arms, horizon, budget, c.arm, c.context);  // range check
    reward_arm = c.arm - 1;
    reward_ctx = c.context - 1;
  }

  Instance inst;
  inst.context_probs.assign(n_ctx, 1.0 / static_cast<double>(n_ctx));
  inst.n_actions = n_arms;
  inst.null_action = 0;
  inst.horizon = horizon;
  inst.budgets = {static_cast<double>(horizon), static_cast<double>(budget)};
  inst.outcomes.resize(n_ctx);
  for (std::size_t x = 0; x < n_ctx; ++x) {
    inst.outcomes[x].resize(n_arms);
    for (std::size_t a = 0; a < n_arms; ++a) {
      const double r = (has_reward && a == reward_arm && x == reward_ctx) ? 1.0 : 0.0;
      const double cost = a == 0 ? 0.0 : 1.0;
      inst.outcomes[x][a] = {OutcomeTriple{r, {1.0, cost}, 1.0}};
    }
  }

  std::vector<PolicyTable> tables;
  tables.reserve((n_arms - 1) * n_ctx);
  for (std::size_t i = 2; i <= n_arms; ++i) {
    for (std::size_t j = 1; j <= n_ctx; ++j) {
      PolicyTable t(n_ctx, 0);
      t[j - 1] = i - 1;
      tables.push_back(std::move(t));
    }
  }
  PolicySet policies = PolicySet::with_null(std::move(tables), n_ctx, n_arms, 0);
  return {std::move(inst), std::move(policies)};
}

Instance gen_procurement_instance(const std::vector<double>& prices,
                                  const std::vector<std::vector<double>>& accept_probs,
                                  double budget, const std::vector<double>& context_probs,
                                  std::size_t horizon) {
  if (accept_probs.size() != context_probs.size()) throw UsageError("procurement: accept_probs needs one row per context");
  for (double p : prices) {
    if (!in_unit(p)) throw UsageError("procurement: price outside [0,1]");
  }
  Instance inst;
  inst.context_probs = context_probs;
  inst.n_actions = prices.size() + 1;
  inst.null_action = 0;
  inst.horizon = horizon;
  inst.budgets = {static_cast<double>(horizon), std::min(budget, static_cast<double>(horizon))};
  inst.outcomes.resize(context_probs.size());
  for (std::size_t x = 0; x < context_probs.size(); ++x) {
    if (accept_probs[x].size() != prices.size()) throw UsageError("procurement: accept_probs row has wrong length");
    auto& row = inst.outcomes[x];
    row.resize(inst.n_actions);
    row[0] = {OutcomeTriple{0.0, {1.0, 0.0}, 1.0}};
    for (std::size_t k = 0; k < prices.size(); ++k) {
      const double q = accept_probs[x][k];
      if (!in_unit(q)) throw UsageError("procurement: acceptance probability outside [0,1]");
      auto& list = row[k + 1];
      if (q > 0.0) list.push_back(OutcomeTriple{1.0, {1.0, prices[k]}, q});
      if (q < 1.0) list.push_back(OutcomeTriple{0.0, {1.0, 0.0}, 1.0 - q});
    }
  }
  return inst;
}

}  // namespace rcb
