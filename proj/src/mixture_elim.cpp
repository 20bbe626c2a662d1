#include "rcb/mixture_elim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rcb/error.hpp"
#include "rcb/lp.hpp"

namespace rcb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBudgetSlack = 1e-9;
constexpr double kDedupTol = 1e-12;
// Multiplicative-weights gains are clipped here so q0 = 0 (infinite loads)
// cannot overflow the exponent.
constexpr double kGainCap = 1e6;

Interval intersect_or_clamp(const Interval& old, double lo, double hi, bool& empty) {
  Interval out{std::max(old.lo, lo), std::min(old.hi, hi)};
  if (out.lo > out.hi) {
    empty = true;
    const double p = hi < old.lo ? old.lo : old.hi;
    out = {p, p};
  }
  return out;
}

}  // namespace

double noise_prob(std::size_t n_actions, std::size_t horizon, std::size_t n_policies) {
  if (n_actions == 0 || horizon == 0 || n_policies == 0) throw UsageError("noise_prob: inputs must be positive");
  const double K = static_cast<double>(n_actions);
  const double T = static_cast<double>(horizon);
  const double P = static_cast<double>(n_policies);
  return std::min(0.5, std::sqrt(K / T * std::log(K * T * P)));
}

double confidence_radius(double t, double nu, double c_rad) {
  if (std::isinf(nu)) return kInf;
  return std::sqrt(c_rad * nu / t);
}

AlgState init_state(const Instance& inst, const PolicySet& policies, const MixtureElimConfig& config) {
  if (policies.n_contexts() != inst.n_contexts() || policies.n_actions() != inst.n_actions) {
    throw UsageError("mixture_elim: policy set does not match instance");
  }
  if (config.samples_m == 0) throw UsageError("mixture_elim: samples_m must be positive");
  AlgState s;
  s.policies = policies;
  s.context_probs = inst.context_probs;
  s.budgets = inst.budgets;
  s.n_actions = inst.n_actions;
  s.horizon = inst.horizon;
  s.config = config;
  s.q0 = config.q0_override ? *config.q0_override : noise_prob(inst.n_actions, inst.horizon, policies.size());
  if (!(s.q0 >= 0.0 && s.q0 <= 0.5)) throw UsageError("mixture_elim: q0 must lie in [0, 1/2]");
  const double d = static_cast<double>(inst.n_resources());
  s.c_rad = config.c0 * std::log(d * static_cast<double>(inst.horizon) * static_cast<double>(policies.size()));

  const std::size_t n = policies.size();
  const std::size_t m = inst.n_resources();
  const double time_use = inst.time_consumption();
  s.boxes.reward.assign(n, Interval{});
  s.boxes.consumption.assign(n, std::vector<Interval>(m, Interval{}));
  s.boxes.fixed_reward.assign(n, false);
  s.boxes.fixed_consumption.assign(n, std::vector<bool>(m, false));
  for (std::size_t p = 0; p < n; ++p) {
    s.boxes.consumption[p][0] = {time_use, time_use};
    s.boxes.fixed_consumption[p][0] = true;
  }
  const std::size_t nul = policies.null_index();
  s.boxes.reward[nul] = {0.0, 0.0};
  s.boxes.fixed_reward[nul] = true;
  for (std::size_t i = 1; i < m; ++i) {
    s.boxes.consumption[nul][i] = {0.0, 0.0};
    s.boxes.fixed_consumption[nul][i] = true;
  }

  s.ips_reward_sum.assign(n, 0.0);
  s.ips_consumption_sum.assign(n, std::vector<double>(m, 0.0));
  s.alpha.assign(n, 1.0);
  s.cumulative_consumption.assign(m, 0.0);
  return s;
}

IpsIncrement ips_estimates(std::size_t context, std::size_t action, const RoundOutcome& outcome,
                           const Propensity& prop, const PolicySet& policies, double q0) {
  const double floor = q0 / static_cast<double>(policies.n_actions());
  if (prop.action != action) throw IntegrityError("ips_estimates: propensity recorded for a different action");
  if (!(prop.prob > 0.0) || prop.prob < floor * (1.0 - 1e-12)) {
    throw IntegrityError("ips_estimates: propensity " + std::to_string(prop.prob) + " below noise floor " +
                         std::to_string(floor));
  }
  const std::size_t n = policies.size();
  const std::size_t m = outcome.consumption.size();
  IpsIncrement inc;
  inc.reward.assign(n, 0.0);
  inc.consumption.assign(n, std::vector<double>(m, 0.0));
  for (std::size_t p = 0; p < n; ++p) {
    if (policies.action(p, context) != action) continue;
    inc.reward[p] = outcome.reward / prop.prob;
    for (std::size_t i = 0; i < m; ++i) inc.consumption[p][i] = outcome.consumption[i] / prop.prob;
  }
  return inc;
}

void accumulate_estimates(AlgState& state, const IpsIncrement& inc) {
  for (std::size_t p = 0; p < state.policies.size(); ++p) {
    state.ips_reward_sum[p] += inc.reward[p];
    for (std::size_t i = 0; i < state.budgets.size(); ++i) state.ips_consumption_sum[p][i] += inc.consumption[p][i];
  }
  ++state.n_observed;
}

bool update_confidence(AlgState& state) {
  if (state.n_observed == 0) return true;
  const double n = static_cast<double>(state.n_observed);
  const double t = n + 1.0;
  const double K = static_cast<double>(state.n_actions);
  bool any_empty = false;
  for (std::size_t p = 0; p < state.policies.size(); ++p) {
    const double a = state.alpha[p];
    const double rad = confidence_radius(t, a > 0.0 ? K / a : kInf, state.c_rad);
    if (std::isinf(rad)) continue;
    auto shrink = [&](Interval& box, double sum) {
      const double avg = sum / n;
      bool empty = false;
      box = intersect_or_clamp(box, std::max(0.0, avg - rad), std::min(1.0, avg + rad), empty);
      any_empty = any_empty || empty;
    };
    if (!state.boxes.fixed_reward[p]) shrink(state.boxes.reward[p], state.ips_reward_sum[p]);
    for (std::size_t i = 0; i < state.budgets.size(); ++i) {
      if (!state.boxes.fixed_consumption[p][i]) shrink(state.boxes.consumption[p][i], state.ips_consumption_sum[p][i]);
    }
  }
  if (any_empty) ++state.clean_violations;
  return !any_empty;
}

std::vector<PolicyMixture> build_potential_set(const AlgState& state, Rng& rng) {
  const std::size_t n = state.policies.size();
  const std::size_t m = state.budgets.size();
  const double T = static_cast<double>(state.horizon);
  const auto& boxes = state.boxes;

  EOTuple mu;
  mu.reward.assign(n, 0.0);
  mu.consumption.assign(n, std::vector<double>(m, 0.0));

  std::vector<PolicyMixture> vertices;
  std::size_t failures = 0;
  for (std::size_t k = 0; k < state.config.samples_m; ++k) {
    for (std::size_t p = 0; p < n; ++p) {
      const Interval& rb = boxes.reward[p];
      switch (k) {
        case 0: mu.reward[p] = 0.5 * (rb.lo + rb.hi); break;
        case 1: mu.reward[p] = rb.hi; break;
        case 2: mu.reward[p] = rb.lo; break;
        default: mu.reward[p] = rb.lo + rng.uniform() * rb.width(); break;
      }
      for (std::size_t i = 0; i < m; ++i) {
        const Interval& cb = boxes.consumption[p][i];
        switch (k) {
          case 0: mu.consumption[p][i] = 0.5 * (cb.lo + cb.hi); break;
          case 1: mu.consumption[p][i] = cb.lo; break;
          case 2: mu.consumption[p][i] = cb.hi; break;
          default: mu.consumption[p][i] = cb.lo + rng.uniform() * cb.width(); break;
        }
      }
    }
    PolicyMixture mix;
    try {
      const LpSolution sol = solve_lpopt(mu, state.budgets, T, state.policies.null_index());
      mix = make_lp_perfect(sol, T, state.policies.null_index());
    } catch (const SolverFailure&) {
      ++failures;
      continue;
    }
    const bool seen = std::any_of(vertices.begin(), vertices.end(),
                                  [&](const PolicyMixture& v) { return v.approx_equal(mix, kDedupTol); });
    if (!seen) vertices.push_back(std::move(mix));
  }
  if (vertices.empty()) {
    throw SolverFailure("build_potential_set: all " + std::to_string(failures) + " LP samples failed", 0.0);
  }
  return vertices;
}

std::vector<double> compute_alpha(std::span<const PolicyMixture> vertices, std::size_t n_policies,
                                  std::span<const double> previous) {
  std::vector<double> alpha(n_policies, 0.0);
  for (const auto& v : vertices) {
    for (const auto& [idx, w] : v.support()) alpha.at(idx) = std::max(alpha[idx], w);
  }
  if (!previous.empty()) {
    for (std::size_t p = 0; p < n_policies; ++p) alpha[p] = std::min(alpha[p], previous[p]);
  }
  return alpha;
}

namespace {

// Load of each policy given P(a|x) tables, skipping zero-probability contexts.
void loads_from_dists(const std::vector<std::vector<double>>& dist, const PolicySet& policies,
                      std::span<const double> context_probs, double q0, std::vector<double>& load) {
  const double floor = q0 / static_cast<double>(policies.n_actions());
  load.assign(policies.size(), 0.0);
  for (std::size_t p = 0; p < policies.size(); ++p) {
    double acc = 0.0;
    for (std::size_t x = 0; x < context_probs.size(); ++x) {
      if (context_probs[x] <= 0.0) continue;
      const double prop = (1.0 - q0) * dist[x][policies.action(p, x)] + floor;
      acc += prop > 0.0 ? context_probs[x] / prop : kInf;
    }
    load[p] = acc;
  }
}

std::vector<std::vector<double>> action_dists(const PolicyMixture& mix, const PolicySet& policies) {
  std::vector<std::vector<double>> dist(policies.n_contexts());
  for (std::size_t x = 0; x < policies.n_contexts(); ++x) dist[x] = induced_action_dist(mix, policies, x);
  return dist;
}

double max_violation(const std::vector<double>& load, std::span<const double> alpha, double K) {
  double worst = -kInf;
  for (std::size_t p = 0; p < load.size(); ++p) {
    if (alpha[p] <= 0.0) continue;
    worst = std::max(worst, load[p] - 2.0 * K / alpha[p]);
  }
  return worst;
}

}  // namespace

std::vector<double> inverse_propensity_load(const PolicyMixture& mix, const PolicySet& policies,
                                            std::span<const double> context_probs, double q0) {
  std::vector<double> load;
  loads_from_dists(action_dists(mix, policies), policies, context_probs, q0, load);
  return load;
}

double balance_violation(const PolicyMixture& mix, std::span<const double> alpha, double q0,
                         std::span<const double> context_probs, const PolicySet& policies) {
  const auto load = inverse_propensity_load(mix, policies, context_probs, q0);
  return max_violation(load, alpha, static_cast<double>(policies.n_actions()));
}

BalanceResult solve_balanced(std::span<const PolicyMixture> vertices, std::span<const double> alpha,
                             double q0, std::span<const double> context_probs,
                             const PolicySet& policies, double tol, std::size_t max_iters) {
  if (vertices.empty()) throw UsageError("solve_balanced: empty vertex set");
  if (!(q0 >= 0.0 && q0 <= 0.5)) throw UsageError("solve_balanced: q0 must lie in [0, 1/2]");
  const std::size_t n = policies.size();
  const std::size_t nv = vertices.size();
  const std::size_t nx = policies.n_contexts();
  const std::size_t na = policies.n_actions();
  const double K = static_cast<double>(na);

  std::vector<std::size_t> active;
  for (std::size_t p = 0; p < n; ++p) {
    if (alpha[p] > 0.0) active.push_back(p);
  }
  if (active.empty()) return {vertices.front(), 0, -kInf};

  // beta[p]: vertex maximizing P(p), lowest index on ties.
  std::vector<std::size_t> beta(n, 0);
  for (std::size_t p : active) {
    double best = -1.0;
    for (std::size_t v = 0; v < nv; ++v) {
      const double w = vertices[v].weight(p);
      if (w > best) {
        best = w;
        beta[p] = v;
      }
    }
  }

  std::vector<std::vector<std::vector<double>>> vdist(nv);
  for (std::size_t v = 0; v < nv; ++v) vdist[v] = action_dists(vertices[v], policies);

  auto mix_dists = [&](const std::vector<double>& vw, std::vector<std::vector<double>>& out) {
    out.assign(nx, std::vector<double>(na, 0.0));
    for (std::size_t v = 0; v < nv; ++v) {
      if (vw[v] == 0.0) continue;
      for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t a = 0; a < na; ++a) out[x][a] += vw[v] * vdist[v][x][a];
      }
    }
  };

  std::vector<double> log_z(n, 0.0);
  std::vector<double> z(n, 0.0);
  std::vector<double> vw(nv), avg_vw(nv, 0.0);
  std::vector<std::vector<double>> dist;
  std::vector<double> load;
  double viol = kInf;

  for (std::size_t it = 1; it <= max_iters; ++it) {
    double zmax = -kInf;
    for (std::size_t p : active) zmax = std::max(zmax, log_z[p]);
    double ztot = 0.0;
    for (std::size_t p : active) {
      z[p] = std::exp(log_z[p] - zmax);
      ztot += z[p];
    }
    std::fill(vw.begin(), vw.end(), 0.0);
    for (std::size_t p : active) vw[beta[p]] += z[p] / ztot;

    const double step = 1.0 / static_cast<double>(it);
    for (std::size_t v = 0; v < nv; ++v) avg_vw[v] += step * (vw[v] - avg_vw[v]);

    mix_dists(avg_vw, dist);
    loads_from_dists(dist, policies, context_probs, q0, load);
    viol = max_violation(load, alpha, K);
    if (viol <= tol) {
      double total = 0.0;
      for (double w : avg_vw) total += w;
      std::vector<PolicyMixture::Entry> entries;
      for (std::size_t v = 0; v < nv; ++v) {
        if (avg_vw[v] <= 0.0) continue;
        for (const auto& [idx, w] : vertices[v].support()) entries.emplace_back(idx, avg_vw[v] / total * w);
      }
      return {PolicyMixture::from_entries(std::move(entries)), it, viol};
    }

    // Constraint player: reweight toward policies the best response starves.
    mix_dists(vw, dist);
    loads_from_dists(dist, policies, context_probs, q0, load);
    const double eta = 0.5 / std::sqrt(static_cast<double>(it));
    for (std::size_t p : active) {
      const double gain = std::min(kGainCap, alpha[p] * load[p] / (2.0 * K));
      log_z[p] += eta * gain;
    }
  }
  throw BalanceFailure("solve_balanced: not feasible after " + std::to_string(max_iters) +
                           " iterations (max violation " + std::to_string(viol) + ")",
                       viol);
}

Propensity select_action(double q0, const PolicyMixture& mix, const PolicySet& policies,
                         std::size_t context, Rng& rng) {
  const std::size_t na = policies.n_actions();
  const auto base = induced_action_dist(mix, policies, context);
  Propensity prop;
  prop.dist.resize(na);
  for (std::size_t a = 0; a < na; ++a) prop.dist[a] = (1.0 - q0) * base[a] + q0 / static_cast<double>(na);

  if (q0 > 0.0 && rng.uniform() < q0) {
    prop.action = rng.uniform_index(na);
  } else {
    const auto& sup = mix.support();
    std::size_t pick = sup.back().first;
    const double u = rng.uniform();
    double acc = 0.0;
    for (const auto& [idx, w] : sup) {
      acc += w;
      if (u < acc) {
        pick = idx;
        break;
      }
    }
    prop.action = policies.action(pick, context);
  }
  prop.prob = prop.dist[prop.action];
  return prop;
}

bool budget_exceeded(std::span<const double> cumulative, std::span<const double> budgets) {
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (cumulative[i] > budgets[i] + kBudgetSlack) return true;
  }
  return false;
}

RunRecord run_episode(const Instance& inst, const PolicySet& policies, const MixtureElimConfig& config,
                      Rng& rng) {
  AlgState state = init_state(inst, policies, config);
  Rng env_rng = rng.split(0);
  Rng alg_rng = rng.split(1);
  const EOTuple truth = expected_outcomes(inst, policies);
  const std::size_t n = policies.size();
  const std::size_t m = inst.n_resources();
  const double floor = state.q0 / static_cast<double>(inst.n_actions);

  RunRecord rec;
  auto& diag = rec.diagnostics;
  diag.q0 = state.q0;
  diag.c_rad = state.c_rad;
  diag.max_balance_violation = -kInf;
  diag.min_propensity_ratio = kInf;
  rec.tau = inst.horizon + 1;
  if (config.keep_trajectory) rec.trajectory.reserve(inst.horizon);

  for (std::size_t t = 1; t <= inst.horizon; ++t) {
    state.round = t;
    std::vector<PolicyMixture> vertices = build_potential_set(state, alg_rng);
    diag.potential_set_sizes.push_back(vertices.size());

    auto alpha = compute_alpha(vertices, n, state.alpha);
    for (std::size_t p = 0; p < n; ++p) diag.alpha_monotone = diag.alpha_monotone && alpha[p] <= state.alpha[p];
    state.alpha = std::move(alpha);

    const BalanceResult bal = solve_balanced(vertices, state.alpha, state.q0, state.context_probs, policies,
                                             config.balance_tol, config.balance_max_iters);
    const double recheck = balance_violation(bal.mixture, state.alpha, state.q0, state.context_probs, policies);
    diag.balance_iterations.push_back(bal.iterations);
    diag.balance_violations.push_back(recheck);
    diag.max_balance_iterations = std::max(diag.max_balance_iterations, bal.iterations);
    diag.max_balance_violation = std::max(diag.max_balance_violation, recheck);

    const std::size_t x = sample_context(inst, env_rng);
    const Propensity prop = select_action(state.q0, bal.mixture, policies, x, alg_rng);
    if (floor > 0.0) diag.min_propensity_ratio = std::min(diag.min_propensity_ratio, prop.prob / floor);
    const RoundOutcome out = sample_round(inst, x, prop.action, env_rng);

    for (std::size_t i = 0; i < m; ++i) state.cumulative_consumption[i] += out.consumption[i];
    if (config.keep_trajectory) rec.trajectory.push_back({x, prop.action, out.reward, prop.prob});
    if (budget_exceeded(state.cumulative_consumption, inst.budgets)) {
      rec.tau = t;
      break;
    }
    state.cumulative_reward += out.reward;

    accumulate_estimates(state, ips_estimates(x, prop.action, out, prop, policies, state.q0));
    const ConfidenceBoxes before = state.boxes;
    update_confidence(state);

    for (std::size_t p = 0; p < n; ++p) {
      auto nested = [](const Interval& now, const Interval& was) { return now.lo >= was.lo && now.hi <= was.hi; };
      diag.boxes_nested = diag.boxes_nested && nested(state.boxes.reward[p], before.reward[p]);
      if (!state.boxes.fixed_reward[p]) {
        ++diag.coverage_checks;
        if (!state.boxes.reward[p].contains(truth.reward[p], 1e-12)) ++diag.coverage_misses;
      }
      for (std::size_t i = 0; i < m; ++i) {
        diag.boxes_nested = diag.boxes_nested && nested(state.boxes.consumption[p][i], before.consumption[p][i]);
        if (state.boxes.fixed_consumption[p][i]) continue;
        ++diag.coverage_checks;
        if (!state.boxes.consumption[p][i].contains(truth.consumption[p][i], 1e-12)) ++diag.coverage_misses;
      }
    }
  }

  rec.total_reward = state.cumulative_reward;
  rec.final_consumption = state.cumulative_consumption;
  diag.clean_violations = state.clean_violations;
  return rec;
}

}  // namespace rcb
