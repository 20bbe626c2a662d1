#include "rcb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "rcb/error.hpp"
#include "rcb/lp.hpp"
#include "rcb/mixture_elim.hpp"

namespace rcb {

namespace {

bool is_integer(double v) { return v == std::floor(v); }

// Flattened outcome law of one policy: context and outcome randomness merged.
struct Branch {
  double prob;
  double reward;
  std::vector<std::size_t> cost;  // non-time resources only
};

std::string precondition(const Instance& inst, std::size_t max_states) {
  if (inst.horizon == 0) return "horizon must be positive";
  double states = static_cast<double>(inst.horizon) + 1.0;
  for (std::size_t i = 1; i < inst.n_resources(); ++i) {
    const double b = inst.budgets[i];
    if (!is_integer(b) || b < 0.0) return "budget " + std::to_string(i) + " is not a nonnegative integer";
    states *= b + 1.0;
  }
  if (states > static_cast<double>(max_states)) return "state space exceeds " + std::to_string(max_states);
  for (const auto& row : inst.outcomes) {
    for (const auto& list : row) {
      for (const auto& o : list) {
        for (std::size_t i = 1; i < o.consumption.size(); ++i) {
          if (!is_integer(o.consumption[i])) return "non-integer consumption of resource " + std::to_string(i);
        }
      }
    }
  }
  return {};
}

}  // namespace

bool dp_applicable(const Instance& inst, std::size_t max_states) { return precondition(inst, max_states).empty(); }

double dp_opt(const Instance& inst, const PolicySet& policies, std::size_t max_states) {
  if (const auto why = precondition(inst, max_states); !why.empty()) throw UsageError("dp_opt: " + why);
  if (policies.n_contexts() != inst.n_contexts()) throw UsageError("dp_opt: policy/context mismatch");

  const std::size_t m = inst.n_resources() - 1;
  std::vector<std::size_t> cap(m), stride(m);
  std::size_t layer = 1;
  for (std::size_t i = 0; i < m; ++i) {
    cap[i] = static_cast<std::size_t>(inst.budgets[i + 1]);
    stride[i] = layer;
    layer *= cap[i] + 1;
  }

  std::vector<std::vector<Branch>> law(policies.size());
  for (std::size_t p = 0; p < policies.size(); ++p) {
    for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
      for (const auto& o : inst.outcomes[x][policies.action(p, x)]) {
        const double w = inst.context_probs[x] * o.prob;
        if (w <= 0.0) continue;
        Branch b{w, o.reward, std::vector<std::size_t>(m)};
        for (std::size_t i = 0; i < m; ++i) b.cost[i] = static_cast<std::size_t>(o.consumption[i + 1]);
        law[p].push_back(std::move(b));
      }
    }
  }

  // next[s] = value with the remaining rounds after this one; s encodes the
  // remaining budget of every non-time resource.
  std::vector<double> next(layer, 0.0), cur(layer, 0.0);
  std::vector<std::size_t> rem(m);
  for (std::size_t t = 0; t < inst.horizon; ++t) {
    for (std::size_t s = 0; s < layer; ++s) {
      std::size_t r = s;
      for (std::size_t i = 0; i < m; ++i) {
        rem[i] = r % (cap[i] + 1);
        r /= cap[i] + 1;
      }
      double best = 0.0;
      for (const auto& branches : law) {
        double v = 0.0;
        for (const auto& b : branches) {
          std::size_t to = s;
          bool ok = true;
          for (std::size_t i = 0; i < m && ok; ++i) {
            if (b.cost[i] > rem[i]) ok = false;
            to -= b.cost[i] * stride[i];
          }
          if (ok) v += b.prob * (b.reward + next[to]);
        }
        best = std::max(best, v);
      }
      cur[s] = best;
    }
    std::swap(cur, next);
  }
  return next[layer - 1];
}

double grid_lpopt(const EOTuple& mu, const std::vector<double>& budgets, double horizon, double resolution) {
  if (!(resolution > 0.0 && resolution <= 1.0)) throw UsageError("grid_lpopt: resolution outside (0,1]");
  const std::size_t n = mu.n_policies();
  const std::size_t m = budgets.size();
  const std::size_t steps = static_cast<std::size_t>(std::llround(1.0 / resolution));
  const std::size_t max_k = std::min(m, n);

  double best = 0.0;
  std::vector<std::size_t> support;
  std::vector<std::size_t> units;
  MixtureStats stats;
  stats.consumption.assign(m, 0.0);

  auto evaluate = [&]() {
    stats.reward = 0.0;
    std::fill(stats.consumption.begin(), stats.consumption.end(), 0.0);
    for (std::size_t j = 0; j < support.size(); ++j) {
      const double w = static_cast<double>(units[j]) / static_cast<double>(steps);
      stats.reward += w * mu.reward[support[j]];
      for (std::size_t i = 0; i < m; ++i) stats.consumption[i] += w * mu.consumption[support[j]][i];
    }
    best = std::max(best, lp_value(stats, budgets, horizon));
  };

  // Weights: compositions of `steps` into support.size() positive parts.
  std::function<void(std::size_t, std::size_t)> weights = [&](std::size_t j, std::size_t left) {
    if (j + 1 == support.size()) {
      units[j] = left;
      evaluate();
      return;
    }
    for (std::size_t u = 1; u + (support.size() - j - 1) <= left; ++u) {
      units[j] = u;
      weights(j + 1, left - u);
    }
  };

  std::function<void(std::size_t)> choose = [&](std::size_t from) {
    if (!support.empty()) {
      units.assign(support.size(), 0);
      if (support.size() <= steps) weights(0, steps);
    }
    if (support.size() == max_k) return;
    for (std::size_t p = from; p < n; ++p) {
      support.push_back(p);
      choose(p + 1);
      support.pop_back();
    }
  };
  choose(0);
  return best;
}

EstimatorMean enumerate_estimator_mean(const Instance& inst, const PolicySet& policies,
                                       const PolicyMixture& mix, double q0, std::size_t policy) {
  if (policy >= policies.size()) throw UsageError("enumerate_estimator_mean: policy out of range");
  const std::size_t K = inst.n_actions;
  const std::size_t d = inst.n_resources();
  EstimatorMean out;
  out.consumption.assign(d, 0.0);
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    if (inst.context_probs[x] <= 0.0) continue;
    // Noisy law computed directly from the mixture entries.
    std::vector<double> law(K, q0 / static_cast<double>(K));
    for (const auto& [idx, w] : mix.support()) law[policies.action(idx, x)] += (1.0 - q0) * w;
    for (std::size_t a = 0; a < K; ++a) {
      if (law[a] <= 0.0) continue;
      Propensity prop{a, law[a], law};
      for (const auto& o : inst.outcomes[x][a]) {
        const double w = inst.context_probs[x] * law[a] * o.prob;
        if (w <= 0.0) continue;
        const IpsIncrement inc = ips_estimates(x, a, RoundOutcome{o.reward, o.consumption}, prop, policies, q0);
        out.reward += w * inc.reward[policy];
        for (std::size_t i = 0; i < d; ++i) out.consumption[i] += w * inc.consumption[policy][i];
      }
    }
  }
  return out;
}

}  // namespace rcb
