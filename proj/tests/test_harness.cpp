#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rcb/error.hpp"
#include "rcb/harness.hpp"
#include "rcb/io.hpp"
#include "rcb/lp.hpp"
#include "test_support.hpp"

using namespace rcb;

namespace {

// One context, null plus an action with r = 0.6, c = 0.5 deterministic.
Scenario exact_fit(std::size_t T) {
  Scenario sc;
  sc.name = "exact";
  sc.inst.context_probs = {1.0};
  sc.inst.n_actions = 2;
  sc.inst.horizon = T;
  sc.inst.budgets = {static_cast<double>(T), static_cast<double>(T) / 2.0};
  sc.inst.outcomes = {{{OutcomeTriple{0.0, {1.0, 0.0}, 1.0}}, {OutcomeTriple{0.6, {1.0, 0.5}, 1.0}}}};
  sc.policies = PolicySet::with_null({{1}}, 1, 2, 0);
  return sc;
}

std::string config_error(const Json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("algorithm ids") {
  for (auto a : all_algorithms()) CHECK(parse_algorithm(algorithm_name(a)) == a);
  CHECK_THROWS_AS(parse_algorithm("greedy"), UsageError);
}

TEST_CASE("config parsing") {
  const Json ok = Json::parse(R"({"schema": 1, "instance": {"generator": "toy3", "horizon": 100, "budget": 25},
    "algorithm": {"id": "mixture_elim", "c0": 0.5, "samples_m": 16, "explore_rounds": 30, "q0": 0.1},
    "replicates": 3, "seed": 7, "out": "x"})");
  const auto cfg = config_from_json(ok);
  CHECK(cfg.algorithm == Algorithm::mixture_elim);
  CHECK(cfg.knobs.mixture_elim.c0 == 0.5);
  CHECK(cfg.knobs.mixture_elim.samples_m == 16);
  CHECK(cfg.knobs.mixture_elim.q0_override.value() == 0.1);
  CHECK(cfg.knobs.explore_rounds == 30);
  CHECK(cfg.replicates == 3);
  CHECK(cfg.seed == 7);
  CHECK(cfg.out == "x");

  Json plain = ok;
  plain["algorithm"] = "uniform_random";
  CHECK(config_from_json(plain).algorithm == Algorithm::uniform_random);

  Json bad = ok;
  bad["schema"] = 2;
  CHECK(config_error(bad).find("schema") != std::string::npos);
  bad = ok;
  bad["algorithm"]["id"] = "nope";
  CHECK(config_error(bad).rfind("/algorithm/id", 0) == 0);
  bad = ok;
  bad["replicates"] = 0;
  CHECK(config_error(bad).rfind("/replicates", 0) == 0);
  bad = ok;
  bad["algorithm"]["c0"] = "big";
  CHECK(config_error(bad).rfind("/algorithm/c0", 0) == 0);
  bad = ok;
  bad.erase("instance");
  CHECK(!config_error(bad).empty());
}

TEST_CASE("build_scenario sources") {
  const auto toy = build_scenario(Json::parse(R"({"generator": "toy3", "horizon": 50, "budget": 10})"));
  CHECK(toy.policies.size() == 4);
  CHECK(toy.inst.budgets == std::vector<double>{50.0, 10.0});

  const auto lb = build_scenario(Json::parse(R"({"generator": "lower_bound", "arms": 2, "horizon": 8, "budget": 2, "cell": [2, 3]})"));
  CHECK(lb.name == "lower_bound_F2_3");
  CHECK(lb.policies.size() == 5);
  CHECK_THROWS_AS(build_scenario(Json::parse(R"({"generator": "lower_bound", "arms": 2, "horizon": 8, "budget": 4})")),
                  ConfigError);
  CHECK_NOTHROW(build_scenario(
      Json::parse(R"({"generator": "lower_bound", "arms": 2, "horizon": 8, "budget": 4, "enforce_regime": false})")));

  const auto pr = build_scenario(Json::parse(
      R"({"generator": "procurement", "prices": [0.2, 0.6], "accept": [[0.3, 0.9]], "contexts": [1.0], "budget": 20, "horizon": 100})"));
  CHECK(pr.inst.n_actions == 3);
  CHECK(pr.policies.size() == 3);  // two constant policies plus null

  const Json inl = {{"inline", instance_to_json(toy.inst)}, {"policies", Json::parse("[[1, 2], [2, 1]]")}};
  const auto in = build_scenario(inl);
  CHECK(in.policies.size() == 3);
  CHECK(in.policies.action(0, 1) == 2);

  try {
    build_scenario(Json::parse(R"({"generator": "toy3", "horizon": 50})"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/instance") == 0);
    CHECK(std::string(e.what()).find("budget") != std::string::npos);
  }
  Json broken = inl;
  broken["inline"]["outcomes"][0][0][0]["r"] = 0.5;
  CHECK_THROWS_AS(build_scenario(broken), ConfigError);
}

TEST_CASE("instance and pricing documents round-trip") {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const Instance a = testing::random_instance(rng, testing::RandomSpec{});
    const Instance b = instance_from_json(instance_to_json(a));
    CHECK(b.context_probs == a.context_probs);
    CHECK(b.budgets == a.budgets);
    CHECK(b.horizon == a.horizon);
    CHECK(b.n_actions == a.n_actions);
    for (std::size_t x = 0; x < a.n_contexts(); ++x) {
      for (std::size_t act = 0; act < a.n_actions; ++act) {
        REQUIRE(b.outcomes[x][act].size() == a.outcomes[x][act].size());
        for (std::size_t j = 0; j < a.outcomes[x][act].size(); ++j) {
          CHECK(b.outcomes[x][act][j].reward == a.outcomes[x][act][j].reward);
          CHECK(b.outcomes[x][act][j].prob == a.outcomes[x][act][j].prob);
          CHECK(b.outcomes[x][act][j].consumption == a.outcomes[x][act][j].consumption);
        }
      }
    }
    const PolicySet p = testing::random_policies(rng, a, 6);
    CHECK(policies_from_json(policies_to_json(p), a).tables() == p.tables());

    const PricingModel m = testing::random_pricing_model(rng, 2);
    const PricingModel m2 = pricing_from_json(pricing_to_json(m));
    CHECK(m2.context_probs == m.context_probs);
    CHECK(m2.lipschitz == m.lipschitz);
    CHECK(m2.breakpoints == m.breakpoints);
  }
}

TEST_CASE("explore_then_exploit schedules") {
  const auto sc = make_toy3(300, 75);
  SUBCASE("no exploration plays the midpoint mixture") {
    EOTuple mid;
    mid.reward = {0.5, 0.5, 0.5, 0.0};
    mid.consumption = {{1.0, 0.5}, {1.0, 0.5}, {1.0, 0.5}, {1.0, 0.0}};
    const auto sol = solve_lpopt(mid, sc.inst.budgets, 300.0, 3);
    const auto mix = make_lp_perfect(sol, 300.0, 3);
    Rng rng(4);
    const auto rec = baseline_explore_then_exploit(sc.inst, sc.policies, 0, rng, true);
    for (const auto& r : rec.trajectory) {
      const auto dist = induced_action_dist(mix, sc.policies, r.context);
      CHECK(r.propensity == dist[r.action]);
      CHECK(dist[r.action] > 0.0);
    }
  }
  SUBCASE("all exploration is uniform play") {
    Rng rng(5);
    const auto rec = baseline_explore_then_exploit(sc.inst, sc.policies, 300, rng, true);
    std::vector<int> counts(3, 0);
    for (const auto& r : rec.trajectory) {
      CHECK(r.propensity == doctest::Approx(1.0 / 3.0));
      counts[r.action]++;
    }
    for (int c : counts) CHECK(c > 0);
  }
  Rng rng(6);
  CHECK_THROWS_AS(baseline_explore_then_exploit(sc.inst, sc.policies, 301, rng), UsageError);
}

TEST_CASE("static_lp_oracle") {
  const auto sc = exact_fit(200);
  const double lpopt = solve_lpopt(expected_outcomes(sc.inst, sc.policies), sc.inst.budgets, 200.0, 0).value;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto rec = baseline_static_lp_oracle(sc.inst, sc.policies, rng);
    CHECK(rec.tau == 201);
    CHECK(std::abs(rec.total_reward - lpopt) <= 1e-9);
    CHECK(std::abs(rec.total_reward - 0.6 * 200) <= 1e-9);
  }

  auto [f0, p0] = gen_lower_bound_instance(2, 8, 2, LowerBoundZero{});
  Rng rng(1);
  CHECK(baseline_static_lp_oracle(f0, p0, rng).total_reward == 0.0);

  const auto toy = make_toy3(2000, 500);
  const auto rep = run_experiment(toy, Algorithm::static_lp_oracle, AlgorithmKnobs{}, 50, 1);
  CHECK(std::abs(rep.lpopt - 975.0) <= 1e-9);
  CHECK(rep.mean_reward >= 0.9 * rep.lpopt);
}

TEST_CASE("uniform_random respects the halting rule") {
  const auto sc = make_toy3(400, 20);
  Rng rng(2);
  const auto rec = baseline_uniform_random(sc.inst, rng, true);
  REQUIRE(rec.tau <= 400);
  double used = 0.0, sum = 0.0;
  for (std::size_t t = 0; t < rec.trajectory.size(); ++t) {
    const auto& r = rec.trajectory[t];
    used += r.action == 1 ? 0.5 : (r.action == 2 ? 0.1 : 0.0);
    if (t + 1 < rec.tau) sum += r.reward;
  }
  CHECK(used > 20.0);
  CHECK(sum == rec.total_reward);
}

TEST_CASE("theoretical_regret_bound") {
  const double dkt = 2.0 * 3.0 * 2000.0;
  CHECK(theoretical_regret_bound(3, 2, 2000, 500, 4, 0.0) ==
        doctest::Approx(std::sqrt(dkt * std::log(dkt * 4))).epsilon(1e-14));
  const double b = theoretical_regret_bound(3, 2, 2000, 500, 4, 975);
  CHECK(b == doctest::Approx(2.95 * std::sqrt(12000.0 * std::log(48000.0))).epsilon(1e-14));
  CHECK(std::abs(b - 1061) < 1.0);
  const double r = theoretical_regret_bound(3, 2, 8000, 500, 4, 0) / theoretical_regret_bound(3, 2, 2000, 500, 4, 0);
  CHECK(r == doctest::Approx(2.0 * std::sqrt(std::log(4 * dkt * 4) / std::log(dkt * 4))).epsilon(1e-14));
  CHECK(r > 2.0);
}

TEST_CASE("run_experiment: arithmetic, seeds and determinism") {
  const auto sc = make_toy3(150, 40);
  AlgorithmKnobs knobs;
  knobs.mixture_elim.samples_m = 8;
  knobs.explore_rounds = 30;
  for (auto algo : all_algorithms()) {
    const auto a = run_experiment(sc, algo, knobs, 5, 100);
    REQUIRE(a.replicates.size() == 5);
    double sum = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(a.replicates[i].seed == 100 + i);
      sum += a.replicates[i].reward;
      // A single replicate reproduces the same number.
      Rng rng(100 + i);
      CHECK(run_algorithm(algo, sc, knobs, rng).total_reward == a.replicates[i].reward);
    }
    CHECK(a.mean_reward == doctest::Approx(sum / 5).epsilon(1e-14));
    CHECK(a.regret_lpopt == a.lpopt - a.mean_reward);
    CHECK(a.stddev_reward >= 0.0);
    CHECK_FALSE(a.dp_opt.has_value());  // B = 40 with c = 0.5 is not integral

    // Parallel and serial runs agree byte for byte.
    setenv("RCB_THREADS", "1", 1);
    const auto serial = report_csv(run_experiment(sc, algo, knobs, 5, 100));
    setenv("RCB_THREADS", "3", 1);
    const auto parallel = report_csv(run_experiment(sc, algo, knobs, 5, 100));
    unsetenv("RCB_THREADS");
    CHECK(serial == parallel);
    CHECK(serial == report_csv(a));
  }
}

TEST_CASE("report_csv columns recompute exactly") {
  const auto sc = make_toy3(80, 20);
  const auto rep = run_experiment(sc, Algorithm::uniform_random, AlgorithmKnobs{}, 4, 9);
  std::istringstream in(report_csv(rep));
  std::string line;
  std::getline(in, line);
  CHECK(line == "seed,reward,tau,regret_lpopt");
  std::size_t i = 0;
  while (std::getline(in, line)) {
    unsigned long long seed = 0;
    double reward = 0, regret = 0;
    std::size_t tau = 0;
    REQUIRE(std::sscanf(line.c_str(), "%llu,%lf,%zu,%lf", &seed, &reward, &tau, &regret) == 4);
    CHECK(seed == rep.replicates[i].seed);
    CHECK(reward == rep.replicates[i].reward);
    CHECK(tau == rep.replicates[i].tau);
    CHECK(regret == rep.lpopt - reward);
    ++i;
  }
  CHECK(i == 4);
  const Json j = report_json(rep);
  CHECK(j["regret_lpopt"].get<double>() == rep.lpopt - rep.mean_reward);
  CHECK(j["replicates"].size() == 4);
}

TEST_CASE("dp_opt is reported when applicable") {
  const auto sc = make_toy3(20, 5);
  auto inst = sc.inst;
  // Integer consumption: replace c with 1 and 0.
  for (auto& row : inst.outcomes) {
    row[1][0].consumption[1] = 1.0;
    row[2][0].consumption[1] = 0.0;
  }
  const Scenario s{"int", inst, sc.policies};
  const auto rep = run_experiment(s, Algorithm::uniform_random, AlgorithmKnobs{}, 2, 1);
  REQUIRE(rep.dp_opt.has_value());
  CHECK(*rep.dp_opt <= rep.lpopt + 1e-9);
  CHECK(rep.regret_dp.value() == *rep.dp_opt - rep.mean_reward);
}

TEST_CASE("thread_count") {
  setenv("RCB_THREADS", "4", 1);
  CHECK(thread_count(10) == 4);
  CHECK(thread_count(2) == 2);
  setenv("RCB_THREADS", "junk", 1);
  CHECK(thread_count(1) == 1);
  unsetenv("RCB_THREADS");
  CHECK(thread_count(100) >= 1);
}
