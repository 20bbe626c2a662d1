#include "rcb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "rcb/error.hpp"
#include "rcb/lp.hpp"
#include "rcb/oracle.hpp"

namespace rcb {

namespace {

constexpr double kBudgetSlack = 1e-9;

std::string at(const std::string& where, const std::string& key) { return where + "/" + key; }

[[noreturn]] void fail(const std::string& where, const std::string& msg) { throw ConfigError(where + ": " + msg); }

template <class T>
T optional_field(const Json& j, const std::string& key, T fallback, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if constexpr (std::is_same_v<T, double>) {
    return json_number(*it, at(where, key));
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) fail(at(where, key), "expected a boolean");
    return it->get<bool>();
  } else {
    return static_cast<T>(json_index(*it, at(where, key)));
  }
}

std::vector<PolicyTable> constant_policies(std::size_t n_contexts, std::size_t n_actions) {
  std::vector<PolicyTable> out;
  for (std::size_t a = 0; a < n_actions; ++a) out.emplace_back(n_contexts, a);
  return out;
}

// Shared episode loop. choose(x, alg_rng) returns (action, propensity);
// observe(x, action, propensity, outcome) sees every round before tau.
template <class Choose, class Observe>
RunRecord play(const Instance& inst, Rng& rng, bool keep, Choose&& choose, Observe&& observe) {
  Rng env_rng = rng.split(0);
  Rng alg_rng = rng.split(1);
  RunRecord rec;
  rec.tau = inst.horizon + 1;
  std::vector<double> cum(inst.n_resources(), 0.0);
  double reward = 0.0;
  for (std::size_t t = 1; t <= inst.horizon; ++t) {
    const std::size_t x = sample_context(inst, env_rng);
    const auto [a, prob] = choose(t, x, alg_rng);
    const RoundOutcome out = sample_round(inst, x, a, env_rng);
    for (std::size_t i = 0; i < cum.size(); ++i) cum[i] += out.consumption[i];
    if (keep) rec.trajectory.push_back({x, a, out.reward, prob});
    if (budget_exceeded(cum, inst.budgets)) {
      rec.tau = t;
      break;
    }
    reward += out.reward;
    observe(t, x, a, prob, out);
  }
  rec.total_reward = reward;
  rec.final_consumption = std::move(cum);
  return rec;
}

std::size_t draw_policy(const PolicyMixture& mix, Rng& rng) {
  const auto& sup = mix.support();
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& [idx, w] : sup) {
    acc += w;
    if (u < acc) return idx;
  }
  return sup.back().first;
}

}  // namespace

std::string algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::mixture_elim: return "mixture_elim";
    case Algorithm::explore_then_exploit: return "explore_then_exploit";
    case Algorithm::static_lp_oracle: return "static_lp_oracle";
    case Algorithm::uniform_random: return "uniform_random";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& id) {
  for (Algorithm a : all_algorithms()) {
    if (algorithm_name(a) == id) return a;
  }
  throw UsageError("unknown algorithm '" + id + "'");
}

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::mixture_elim, Algorithm::explore_then_exploit, Algorithm::static_lp_oracle,
          Algorithm::uniform_random};
}

Scenario make_toy3(std::size_t horizon, double budget) {
  Scenario sc;
  sc.name = "toy3";
  Instance& inst = sc.inst;
  inst.context_probs = {0.5, 0.5};
  inst.n_actions = 3;
  inst.null_action = 0;
  inst.horizon = horizon;
  inst.budgets = {static_cast<double>(horizon), budget};
  for (std::size_t x = 0; x < 2; ++x) {
    inst.outcomes.push_back({{OutcomeTriple{0.0, {1.0, 0.0}, 1.0}},
                             {OutcomeTriple{0.8, {1.0, 0.5}, 1.0}},
                             {OutcomeTriple{0.3, {1.0, 0.1}, 1.0}}});
  }
  sc.policies = PolicySet::with_null({{1, 1}, {2, 2}, {1, 2}}, 2, 3, 0);
  return sc;
}

Scenario build_scenario(const Json& spec, const std::string& where) {
  if (!spec.is_object()) fail(where, "expected an object");
  Scenario sc;
  try {
    if (spec.contains("inline")) {
      sc.name = "inline";
      sc.inst = instance_from_json(spec["inline"], at(where, "inline"));
      const auto v = validate_instance(sc.inst);
      if (!v.empty()) fail(at(at(where, "inline"), v.front().location), v.front().message);
      if (spec.contains("policies")) {
        sc.policies = policies_from_json(spec["policies"], sc.inst, at(where, "policies"));
      } else {
        sc.policies = PolicySet::with_null(constant_policies(sc.inst.n_contexts(), sc.inst.n_actions),
                                           sc.inst.n_contexts(), sc.inst.n_actions, sc.inst.null_action);
      }
      return sc;
    }
    const Json& gen = require_field(spec, "generator", where);
    if (!gen.is_string()) fail(at(where, "generator"), "expected a string");
    const std::string kind = gen.get<std::string>();
    const std::size_t T = json_index(require_field(spec, "horizon", where), at(where, "horizon"));
    if (kind == "toy3") {
      const double B = json_number(require_field(spec, "budget", where), at(where, "budget"));
      sc = make_toy3(T, B);
    } else if (kind == "lower_bound") {
      const std::size_t K = json_index(require_field(spec, "arms", where), at(where, "arms"));
      const std::size_t B = json_index(require_field(spec, "budget", where), at(where, "budget"));
      const bool regime = optional_field<bool>(spec, "enforce_regime", true, where);
      LowerBoundVariant variant = LowerBoundZero{};
      sc.name = "lower_bound_F0";
      if (spec.contains("cell") && !spec["cell"].is_null()) {
        const Json& c = spec["cell"];
        if (!c.is_array() || c.size() != 2) fail(at(where, "cell"), "expected [arm, context]");
        const std::size_t i = json_index(c[0], at(where, "cell/0"));
        const std::size_t j = json_index(c[1], at(where, "cell/1"));
        variant = LowerBoundCell{i, j};
        sc.name = "lower_bound_F" + std::to_string(i) + "_" + std::to_string(j);
      }
      auto [inst, pol] = gen_lower_bound_instance(K, T, B, variant, regime);
      sc.inst = std::move(inst);
      sc.policies = std::move(pol);
    } else if (kind == "procurement") {
      sc.name = "procurement";
      std::vector<double> prices, ctx;
      std::vector<std::vector<double>> accept;
      for (const auto& p : require_field(spec, "prices", where)) prices.push_back(json_number(p, at(where, "prices")));
      for (const auto& p : require_field(spec, "contexts", where)) ctx.push_back(json_number(p, at(where, "contexts")));
      for (const auto& row : require_field(spec, "accept", where)) {
        std::vector<double> r;
        for (const auto& q : row) r.push_back(json_number(q, at(where, "accept")));
        accept.push_back(std::move(r));
      }
      const double B = json_number(require_field(spec, "budget", where), at(where, "budget"));
      sc.inst = gen_procurement_instance(prices, accept, B, ctx, T);
      if (spec.contains("policies")) {
        sc.policies = policies_from_json(spec["policies"], sc.inst, at(where, "policies"));
      } else {
        sc.policies = PolicySet::with_null(constant_policies(ctx.size(), sc.inst.n_actions), ctx.size(),
                                           sc.inst.n_actions, 0);
      }
    } else {
      fail(at(where, "generator"), "unknown generator '" + kind + "'");
    }
  } catch (const UsageError& e) {
    fail(where, e.what());
  }
  const auto v = validate_instance(sc.inst);
  if (!v.empty()) fail(where, v.front().location + ": " + v.front().message);
  return sc;
}

ExperimentConfig config_from_json(const Json& j) {
  const std::string root;
  require_schema(j, root);
  ExperimentConfig cfg;
  cfg.instance_spec = require_field(j, "instance", root);
  const Json& alg = require_field(j, "algorithm", root);
  const std::string aw = "/algorithm";
  if (alg.is_string()) {
    try {
      cfg.algorithm = parse_algorithm(alg.get<std::string>());
    } catch (const UsageError& e) {
      fail(aw, e.what());
    }
  } else {
    const Json& id = require_field(alg, "id", aw);
    if (!id.is_string()) fail(aw + "/id", "expected a string");
    try {
      cfg.algorithm = parse_algorithm(id.get<std::string>());
    } catch (const UsageError& e) {
      fail(aw + "/id", e.what());
    }
    auto& me = cfg.knobs.mixture_elim;
    me.c0 = optional_field<double>(alg, "c0", me.c0, aw);
    me.samples_m = optional_field<std::size_t>(alg, "samples_m", me.samples_m, aw);
    me.balance_tol = optional_field<double>(alg, "balance_tol", me.balance_tol, aw);
    me.balance_max_iters = optional_field<std::size_t>(alg, "balance_max_iters", me.balance_max_iters, aw);
    if (alg.contains("q0")) me.q0_override = json_number(alg["q0"], aw + "/q0");
    cfg.knobs.explore_rounds = optional_field<std::size_t>(alg, "explore_rounds", cfg.knobs.explore_rounds, aw);
  }
  cfg.replicates = optional_field<std::size_t>(j, "replicates", 1, root);
  if (cfg.replicates == 0) fail("/replicates", "must be at least 1");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("/seed", "expected an unsigned 64-bit integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) fail("/out", "expected a string");
    cfg.out = j["out"].get<std::string>();
  }
  return cfg;
}

RunRecord baseline_explore_then_exploit(const Instance& inst, const PolicySet& policies,
                                        std::size_t explore_rounds, Rng& rng, bool keep_trajectory) {
  if (explore_rounds > inst.horizon) throw UsageError("explore_then_exploit: explore_rounds exceeds horizon");
  const std::size_t K = inst.n_actions;
  const std::size_t n = policies.size();
  const std::size_t m = inst.n_resources();
  const double time_use = inst.time_consumption();

  std::vector<double> r_sum(n, 0.0);
  std::vector<std::vector<double>> c_sum(n, std::vector<double>(m, 0.0));
  std::vector<double> cum(m, 0.0);
  std::optional<PolicyMixture> exploit;

  auto estimate = [&]() {
    EOTuple mu;
    mu.reward.assign(n, 0.5);
    mu.consumption.assign(n, std::vector<double>(m, 0.5));
    const double cnt = static_cast<double>(explore_rounds);
    for (std::size_t p = 0; p < n; ++p) {
      if (explore_rounds > 0) {
        mu.reward[p] = std::clamp(r_sum[p] / cnt, 0.0, 1.0);
        for (std::size_t i = 1; i < m; ++i) mu.consumption[p][i] = std::clamp(c_sum[p][i] / cnt, 0.0, 1.0);
      }
      mu.consumption[p][0] = time_use;
    }
    const std::size_t nul = policies.null_index();
    mu.reward[nul] = 0.0;
    for (std::size_t i = 1; i < m; ++i) mu.consumption[nul][i] = 0.0;
    const double rest = static_cast<double>(inst.horizon - explore_rounds);
    std::vector<double> left(m);
    for (std::size_t i = 0; i < m; ++i) left[i] = std::max(0.0, inst.budgets[i] - cum[i]);
    const LpSolution sol = solve_lpopt(mu, left, rest, nul);
    return make_lp_perfect(sol, rest, nul);
  };

  auto choose = [&](std::size_t t, std::size_t x, Rng& alg) -> std::pair<std::size_t, double> {
    if (t <= explore_rounds) return {alg.uniform_index(K), 1.0 / static_cast<double>(K)};
    if (!exploit) exploit = estimate();
    const std::size_t p = draw_policy(*exploit, alg);
    const auto dist = induced_action_dist(*exploit, policies, x);
    const std::size_t a = policies.action(p, x);
    return {a, dist[a]};
  };
  auto observe = [&](std::size_t t, std::size_t x, std::size_t a, double prob, const RoundOutcome& out) {
    for (std::size_t i = 0; i < m; ++i) cum[i] += out.consumption[i];
    if (t > explore_rounds) return;
    const Propensity prop{a, prob, {}};
    // Uniform play is the noisy law with q0 = 1.
    const IpsIncrement inc = ips_estimates(x, a, out, prop, policies, 1.0);
    for (std::size_t p = 0; p < n; ++p) {
      r_sum[p] += inc.reward[p];
      for (std::size_t i = 0; i < m; ++i) c_sum[p][i] += inc.consumption[p][i];
    }
  };
  return play(inst, rng, keep_trajectory, choose, observe);
}

RunRecord baseline_static_lp_oracle(const Instance& inst, const PolicySet& policies, Rng& rng,
                                    bool keep_trajectory) {
  const double T = static_cast<double>(inst.horizon);
  const LpSolution sol = solve_lpopt(expected_outcomes(inst, policies), inst.budgets, T, policies.null_index());
  const PolicyMixture mix = make_lp_perfect(sol, T, policies.null_index());
  auto choose = [&](std::size_t, std::size_t x, Rng& alg) -> std::pair<std::size_t, double> {
    const std::size_t a = policies.action(draw_policy(mix, alg), x);
    return {a, induced_action_dist(mix, policies, x)[a]};
  };
  auto observe = [](std::size_t, std::size_t, std::size_t, double, const RoundOutcome&) {};
  return play(inst, rng, keep_trajectory, choose, observe);
}

RunRecord baseline_uniform_random(const Instance& inst, Rng& rng, bool keep_trajectory) {
  const std::size_t K = inst.n_actions;
  auto choose = [&](std::size_t, std::size_t, Rng& alg) -> std::pair<std::size_t, double> {
    return {alg.uniform_index(K), 1.0 / static_cast<double>(K)};
  };
  auto observe = [](std::size_t, std::size_t, std::size_t, double, const RoundOutcome&) {};
  return play(inst, rng, keep_trajectory, choose, observe);
}

RunRecord run_algorithm(Algorithm algo, const Scenario& sc, const AlgorithmKnobs& knobs, Rng& rng) {
  switch (algo) {
    case Algorithm::mixture_elim: return run_episode(sc.inst, sc.policies, knobs.mixture_elim, rng);
    case Algorithm::explore_then_exploit:
      return baseline_explore_then_exploit(sc.inst, sc.policies, std::min(knobs.explore_rounds, sc.inst.horizon), rng);
    case Algorithm::static_lp_oracle: return baseline_static_lp_oracle(sc.inst, sc.policies, rng);
    case Algorithm::uniform_random: return baseline_uniform_random(sc.inst, rng);
  }
  throw UsageError("run_algorithm: unknown algorithm");
}

double theoretical_regret_bound(std::size_t n_actions, std::size_t n_resources, std::size_t horizon,
                                double budget, std::size_t n_policies, double opt) {
  if (n_actions == 0 || n_resources == 0 || horizon == 0 || n_policies == 0 || !(budget > 0.0)) {
    throw UsageError("theoretical_regret_bound: inputs must be positive");
  }
  const double dkt = static_cast<double>(n_resources) * static_cast<double>(n_actions) * static_cast<double>(horizon);
  return (1.0 + opt / budget) * std::sqrt(dkt * std::log(dkt * static_cast<double>(n_policies)));
}

std::size_t thread_count(std::size_t jobs) {
  std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RCB_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = v;
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

Report run_experiment(const Scenario& sc, Algorithm algo, const AlgorithmKnobs& knobs, std::size_t replicates,
                      std::uint64_t base_seed) {
  if (replicates == 0) throw UsageError("run_experiment: replicates must be at least 1");
  AlgorithmKnobs local = knobs;
  local.mixture_elim.keep_trajectory = false;

  Report rep;
  rep.scenario = sc.name;
  rep.algorithm = algorithm_name(algo);
  rep.horizon = sc.inst.horizon;
  rep.budgets = sc.inst.budgets;
  rep.n_actions = sc.inst.n_actions;
  rep.n_policies = sc.policies.size();
  rep.replicates.resize(replicates);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&]() {
    for (std::size_t i = next++; i < replicates; i = next++) {
      try {
        ReplicateResult& r = rep.replicates[i];
        r.seed = base_seed + i;
        Rng rng(r.seed);
        RunRecord rec = run_algorithm(algo, sc, local, rng);
        r.reward = rec.total_reward;
        r.tau = rec.tau;
        r.diagnostics = std::move(rec.diagnostics);
        r.diagnostics.balance_iterations.clear();
        r.diagnostics.balance_violations.clear();
        r.diagnostics.potential_set_sizes.clear();
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t nt = thread_count(replicates);
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < nt; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  double sum = 0.0;
  for (const auto& r : rep.replicates) sum += r.reward;
  rep.mean_reward = sum / static_cast<double>(replicates);
  double ss = 0.0;
  for (const auto& r : rep.replicates) ss += (r.reward - rep.mean_reward) * (r.reward - rep.mean_reward);
  rep.stddev_reward = replicates > 1 ? std::sqrt(ss / static_cast<double>(replicates - 1)) : 0.0;

  const double T = static_cast<double>(sc.inst.horizon);
  rep.lpopt = solve_lpopt(expected_outcomes(sc.inst, sc.policies), sc.inst.budgets, T, sc.policies.null_index()).value;
  rep.regret_lpopt = rep.lpopt - rep.mean_reward;
  if (dp_applicable(sc.inst)) {
    rep.dp_opt = dp_opt(sc.inst, sc.policies);
    rep.regret_dp = *rep.dp_opt - rep.mean_reward;
  }
  double b = sc.inst.min_budget();
  if (!(b > 0.0)) b = T;
  rep.bound = theoretical_regret_bound(sc.inst.n_actions, sc.inst.n_resources(), sc.inst.horizon, b,
                                       sc.policies.size(), rep.lpopt);
  return rep;
}

Report run_experiment(const ExperimentConfig& config) {
  const Scenario sc = build_scenario(config.instance_spec);
  return run_experiment(sc, config.algorithm, config.knobs, config.replicates, config.seed);
}

std::string report_csv(const Report& report) {
  std::string out = "seed,reward,tau,regret_lpopt\n";
  char buf[128];
  for (const auto& r : report.replicates) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%zu,%.17g\n", static_cast<unsigned long long>(r.seed), r.reward, r.tau,
                  report.lpopt - r.reward);
    out += buf;
  }
  return out;
}

Json report_json(const Report& report) {
  Json reps = Json::array();
  for (const auto& r : report.replicates) {
    Json jr = {{"seed", r.seed}, {"reward", r.reward}, {"tau", r.tau}, {"regret_lpopt", report.lpopt - r.reward}};
    if (report.algorithm == "mixture_elim") {
      const auto& d = r.diagnostics;
      jr["diagnostics"] = {{"q0", d.q0},
                           {"c_rad", d.c_rad},
                           {"clean_violations", d.clean_violations},
                           {"coverage_miss_rate", d.coverage_miss_rate()},
                           {"max_balance_iterations", d.max_balance_iterations},
                           {"max_balance_violation", d.max_balance_violation},
                           {"alpha_monotone", d.alpha_monotone},
                           {"boxes_nested", d.boxes_nested}};
    }
    reps.push_back(std::move(jr));
  }
  Json j = {{"schema", 1},
            {"scenario", report.scenario},
            {"algorithm", report.algorithm},
            {"horizon", report.horizon},
            {"budgets", report.budgets},
            {"actions", report.n_actions},
            {"policies", report.n_policies},
            {"mean_reward", report.mean_reward},
            {"stddev_reward", report.stddev_reward},
            {"lpopt", report.lpopt},
            {"regret_lpopt", report.regret_lpopt},
            {"theoretical_bound", report.bound},
            {"replicates", std::move(reps)}};
  j["dp_opt"] = report.dp_opt ? Json(*report.dp_opt) : Json(nullptr);
  j["regret_dp"] = report.regret_dp ? Json(*report.regret_dp) : Json(nullptr);
  return j;
}

void write_report(const Report& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir);
  std::ofstream(base / "report.json") << report_json(report).dump(2) << '\n';
  std::ofstream csv(base / "replicates.csv", std::ios::binary);
  csv << report_csv(report);
  if (!csv) throw ConfigError(dir + ": cannot write replicates.csv");
}

}  // namespace rcb
