#include "rcb/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rcb/error.hpp"
#include "rcb/lp.hpp"

namespace rcb {

namespace {

constexpr double kGridTol = 1e-9;
constexpr double kCheckSlack = 1e-9;

std::string ctx(std::size_t x) { return "sales_rate[" + std::to_string(x) + "]"; }

}  // namespace

double PricingModel::sales(std::size_t context, double price) const {
  const auto& bp = breakpoints.at(context);
  if (price <= bp.front().first) return bp.front().second;
  if (price >= bp.back().first) return bp.back().second;
  auto it = std::upper_bound(bp.begin(), bp.end(), price,
                             [](double p, const std::pair<double, double>& b) { return p < b.first; });
  const auto& [p1, s1] = *it;
  const auto& [p0, s0] = *(it - 1);
  if (p1 == p0) return s1;
  return s0 + (s1 - s0) * (price - p0) / (p1 - p0);
}

std::vector<std::string> pricing_model_violations(const PricingModel& model) {
  std::vector<std::string> out;
  if (model.n_contexts() == 0) out.push_back("contexts: no contexts");
  if (!(model.lipschitz >= 1.0)) out.push_back("lipschitz: must be >= 1");
  double sum = 0.0;
  for (double p : model.context_probs) {
    if (!(p >= 0.0 && p <= 1.0)) out.push_back("contexts: probability outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) out.push_back("contexts: probabilities sum != 1");
  if (model.breakpoints.size() != model.n_contexts()) {
    out.push_back("sales_rate: expected one breakpoint list per context");
    return out;
  }
  for (std::size_t x = 0; x < model.n_contexts(); ++x) {
    const auto& bp = model.breakpoints[x];
    if (bp.size() < 2 || bp.front().first != 0.0 || bp.back().first != 1.0) {
      out.push_back(ctx(x) + ": breakpoints must start at p=0 and end at p=1");
      continue;
    }
    for (std::size_t k = 0; k < bp.size(); ++k) {
      const auto [p, s] = bp[k];
      if (!(s >= 0.0 && s <= 1.0)) out.push_back(ctx(x) + ": S outside [0,1]");
      if (k == 0) continue;
      const auto [pp, ps] = bp[k - 1];
      if (!(p > pp)) out.push_back(ctx(x) + ": prices not strictly increasing");
      if (s > ps) out.push_back(ctx(x) + ": S increases in p");
      // Slopes bound every pair once every segment is bounded.
      if (p > pp && (ps - s) > model.lipschitz * (p - pp) * (1.0 + 1e-12)) {
        out.push_back(ctx(x) + ": slope exceeds Lipschitz constant near p=" + std::to_string(p));
      }
    }
  }
  return out;
}

void require_valid_model(const PricingModel& model) {
  const auto v = pricing_model_violations(model);
  if (v.empty()) return;
  std::string msg = "invalid pricing model:";
  for (const auto& s : v) msg += "\n  " + s;
  throw UsageError(msg);
}

std::size_t grid_index(double p, double eps) {
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("grid_index: price outside [0,1]");
  if (!(eps > 0.0 && eps <= 1.0)) throw UsageError("grid_index: eps outside (0,1]");
  return static_cast<std::size_t>(std::floor(p / eps + kGridTol));
}

double round_down_price(double p, double eps) {
  const double k = static_cast<double>(grid_index(p, eps));
  return std::min(k * eps, p);
}

std::vector<double> price_grid(double eps) {
  const std::size_t top = grid_index(1.0, eps);
  std::vector<double> grid(top + 1);
  for (std::size_t k = 0; k <= top; ++k) grid[k] = std::min(static_cast<double>(k) * eps, 1.0);
  return grid;
}

std::vector<PricePolicy> discretize_policy_set(const std::vector<PricePolicy>& policies, double eps) {
  std::vector<PricePolicy> out;
  std::vector<std::vector<std::size_t>> keys;
  for (const auto& pi : policies) {
    std::vector<std::size_t> key;
    PricePolicy rounded;
    for (double p : pi.prices) {
      key.push_back(grid_index(p, eps));
      rounded.prices.push_back(round_down_price(p, eps));
    }
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
    keys.push_back(std::move(key));
    out.push_back(std::move(rounded));
  }
  return out;
}

EpsilonChoice epsilon_star(double budget, double lipschitz, double horizon, std::size_t n_policies) {
  if (!(budget > 0.0 && lipschitz > 0.0 && horizon > 0.0) || n_policies == 0) {
    throw UsageError("epsilon_star: inputs must be positive");
  }
  const double lg = std::log(horizon * static_cast<double>(n_policies));
  const double eps = std::pow(budget * lipschitz, -0.4) * std::pow(horizon, -0.2) * std::pow(std::max(lg, 0.0), 0.6);
  if (!(eps > 0.0) || eps > 1.0) return {1.0, true};
  return {eps, false};
}

double delta_of_eps(double eps, double budget, double lipschitz, double horizon) {
  return std::cbrt(2.0 * eps * budget * lipschitz / horizon);
}

Instance pricing_to_instance(const PricingModel& model, const std::vector<double>& prices, double budget,
                             std::size_t horizon) {
  require_valid_model(model);
  Instance inst;
  inst.context_probs = model.context_probs;
  inst.n_actions = prices.size() + 1;
  inst.null_action = 0;
  inst.horizon = horizon;
  inst.budgets = {static_cast<double>(horizon), std::min(budget, static_cast<double>(horizon))};
  inst.outcomes.resize(model.n_contexts());
  for (std::size_t x = 0; x < model.n_contexts(); ++x) {
    auto& row = inst.outcomes[x];
    row.resize(inst.n_actions);
    row[0] = {OutcomeTriple{0.0, {1.0, 0.0}, 1.0}};
    for (std::size_t k = 0; k < prices.size(); ++k) {
      const double p = prices[k];
      if (!(p >= 0.0 && p <= 1.0)) throw UsageError("pricing_to_instance: price outside [0,1]");
      const double s = model.sales(x, p);
      auto& list = row[k + 1];
      if (s > 0.0) list.push_back(OutcomeTriple{p, {1.0, 1.0}, s});
      if (s < 1.0) list.push_back(OutcomeTriple{0.0, {1.0, 0.0}, 1.0 - s});
    }
  }
  return inst;
}

PolicySet price_policies_to_set(const std::vector<PricePolicy>& policies, const std::vector<double>& prices) {
  if (policies.empty()) throw UsageError("price_policies_to_set: empty policy set");
  const std::size_t nx = policies.front().prices.size();
  std::vector<PolicyTable> tables;
  for (const auto& pi : policies) {
    if (pi.prices.size() != nx) throw UsageError("price_policies_to_set: ragged policies");
    PolicyTable t(nx);
    for (std::size_t x = 0; x < nx; ++x) {
      auto it = std::find_if(prices.begin(), prices.end(),
                             [&](double q) { return std::abs(q - pi.prices[x]) <= 1e-12; });
      if (it == prices.end()) throw UsageError("price_policies_to_set: price not offered");
      t[x] = static_cast<std::size_t>(it - prices.begin()) + 1;
    }
    tables.push_back(std::move(t));
  }
  return PolicySet::with_null(std::move(tables), nx, prices.size() + 1, 0);
}

std::vector<double> distinct_prices(const std::vector<PricePolicy>& policies) {
  std::vector<double> out;
  for (const auto& pi : policies) out.insert(out.end(), pi.prices.begin(), pi.prices.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double sales_of(const PricingModel& model, const PricePolicy& pi) {
  double s = 0.0;
  for (std::size_t x = 0; x < model.n_contexts(); ++x) s += model.context_probs[x] * model.sales(x, pi.prices[x]);
  return s;
}

double revenue_of(const PricingModel& model, const PricePolicy& pi) {
  double r = 0.0;
  for (std::size_t x = 0; x < model.n_contexts(); ++x) {
    r += model.context_probs[x] * pi.prices[x] * model.sales(x, pi.prices[x]);
  }
  return r;
}

EOTuple analytic_mu(const PricingModel& model, const std::vector<PricePolicy>& policies) {
  EOTuple mu;
  for (const auto& pi : policies) {
    if (pi.prices.size() != model.n_contexts()) throw UsageError("analytic_mu: policy/context mismatch");
    mu.reward.push_back(revenue_of(model, pi));
    mu.consumption.push_back({1.0, sales_of(model, pi)});
  }
  mu.reward.push_back(0.0);
  mu.consumption.push_back({1.0, 0.0});
  return mu;
}

double pricing_lpopt(const PricingModel& model, const std::vector<PricePolicy>& policies, double budget,
                     std::size_t horizon) {
  const double T = static_cast<double>(horizon);
  const EOTuple mu = analytic_mu(model, policies);
  const std::vector<double> budgets{T, std::min(budget, T)};
  return solve_lpopt(mu, budgets, T, policies.size()).value;
}

DiscretizationReport check_discretization_bounds(const PricingModel& model,
                                                 const std::vector<PricePolicy>& policies, double eps,
                                                 double budget, std::size_t horizon) {
  require_valid_model(model);
  if (!(eps > 0.0 && eps <= 1.0)) throw UsageError("check_discretization_bounds: eps outside (0,1]");
  if (horizon == 0 || !(budget > 0.0)) throw UsageError("check_discretization_bounds: need T > 0 and B > 0");
  for (const auto& pi : policies) {
    if (pi.prices.size() != model.n_contexts()) throw UsageError("check_discretization_bounds: policy/context mismatch");
  }
  const double T = static_cast<double>(horizon);
  const double L = model.lipschitz;

  DiscretizationReport rep;
  rep.eps = eps;
  rep.budget = std::min(budget, T);
  rep.delta = delta_of_eps(eps, rep.budget, L, T);
  rep.n_policies = policies.size();

  std::vector<PricePolicy> rounded;
  std::vector<PricePolicy> phi;
  const double ratio_slack = eps * (1.0 + L / (rep.delta * rep.delta));
  for (const auto& pi : policies) {
    PricePolicy pe;
    for (std::size_t x = 0; x < model.n_contexts(); ++x) {
      const double p = pi.prices[x];
      const double q = round_down_price(p, eps);
      pe.prices.push_back(q);
      const double s = model.sales(x, p);
      const double se = model.sales(x, q);
      if (!(q <= p && q >= p - eps - kGridTol)) rep.coupling_ok = false;
      if (se < s || se > s + eps * L + kCheckSlack) rep.coupling_ok = false;
    }
    const double s = sales_of(model, pi);
    const double se = sales_of(model, pe);
    if (se < s) rep.p1_ok = false;
    if (s >= rep.delta) {
      phi.push_back(pi);
      if (se > 0.0) {
        const double lhs = revenue_of(model, pe) / se;
        const double rhs = revenue_of(model, pi) / s - ratio_slack;
        if (lhs < rhs - kCheckSlack) rep.p2_ok = false;
      }
    }
    rounded.push_back(std::move(pe));
  }
  const auto pi_eps = discretize_policy_set(policies, eps);
  rep.n_discretized = pi_eps.size();
  rep.n_phi = phi.size();

  rep.lpopt_pi = pricing_lpopt(model, policies, rep.budget, horizon);
  rep.lpopt_eps = pricing_lpopt(model, pi_eps, rep.budget, horizon);
  rep.lpopt_phi = pricing_lpopt(model, phi, rep.budget, horizon);

  rep.phi_gap_ok = rep.lpopt_pi - rep.lpopt_phi <= rep.delta * T + kCheckSlack;
  rep.eps_gap_ok = rep.lpopt_pi - rep.lpopt_eps <= 2.0 * rep.delta * T + 2.0 * eps * rep.budget + kCheckSlack;
  rep.lemma1_ok = rep.lpopt_phi - rep.lpopt_eps <= 2.0 * ratio_slack * rep.budget + kCheckSlack;

  if (!pi_eps.empty()) {
    // Same mixtures through the sampled-instance path; grid prices are k * eps.
    const auto grid = price_grid(eps);
    std::vector<PricePolicy> on_grid;
    for (const auto& pe : pi_eps) {
      PricePolicy g;
      for (double q : pe.prices) g.prices.push_back(grid[grid_index(q, eps)]);
      on_grid.push_back(std::move(g));
    }
    const Instance inst = pricing_to_instance(model, grid, rep.budget, horizon);
    const PolicySet set = price_policies_to_set(on_grid, grid);
    const double v = solve_lpopt(expected_outcomes(inst, set), inst.budgets, T, set.null_index()).value;
    rep.grid_matches_analytic = std::abs(v - rep.lpopt_eps) <= 1e-9 * std::max(1.0, T);
  }
  return rep;
}

double discretization_regret_bound(double horizon, double budget, double lipschitz, std::size_t n_policies) {
  const double lg = std::log(horizon * static_cast<double>(n_policies));
  return std::pow(horizon, 0.6) * std::pow(budget, 0.2) * std::pow(lipschitz * lg, 0.2);
}

}  // namespace rcb
