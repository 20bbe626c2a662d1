#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcb/env.hpp"
#include "rcb/io.hpp"
#include "rcb/mixture_elim.hpp"
#include "rcb/policy.hpp"
#include "rcb/rng.hpp"

namespace rcb {

enum class Algorithm { mixture_elim, explore_then_exploit, static_lp_oracle, uniform_random };

std::string algorithm_name(Algorithm algo);
/// Throws UsageError on an unknown id.
Algorithm parse_algorithm(const std::string& id);
std::vector<Algorithm> all_algorithms();

struct AlgorithmKnobs {
  MixtureElimConfig mixture_elim;
  std::size_t explore_rounds = 200;
};

struct Scenario {
  std::string name;
  Instance inst;
  PolicySet policies;
};

/// Two uniform contexts; actions null, a1 (r=0.8, c=0.5), a2 (r=0.3, c=0.1),
/// all deterministic. Policies: always a1, always a2, a1 on context 0 and a2
/// on context 1, and null. Budgets {T, B}.
Scenario make_toy3(std::size_t horizon, double budget);

/// Instance source of an experiment config:
///   {"generator": "toy3", "horizon": T, "budget": B}
///   {"generator": "lower_bound", "arms": K, "horizon": T, "budget": B,
///    "cell": [i, j] (optional), "enforce_regime": bool}
///   {"generator": "procurement", "prices": [..], "accept": [[..]], "contexts": [..],
///    "budget": B, "horizon": T}
///   {"inline": <instance document>, "policies": [[..]]}
/// Procurement and inline sources without "policies" get every
/// context-independent policy.
Scenario build_scenario(const Json& spec, const std::string& where = "/instance");

struct ExperimentConfig {
  Json instance_spec;
  Algorithm algorithm = Algorithm::mixture_elim;
  AlgorithmKnobs knobs;
  std::size_t replicates = 1;
  std::uint64_t seed = 1;
  std::string out;
};

/// {"schema": 1, "instance": {...}, "algorithm": {"id": .., knobs},
///  "replicates": n, "seed": s, "out": dir}
ExperimentConfig config_from_json(const Json& j);

/// Uniform exploration for `explore_rounds`, then the LP-perfect mixture of
/// the inverse-propensity point estimate on the remaining budgets.
RunRecord baseline_explore_then_exploit(const Instance& inst, const PolicySet& policies,
                                        std::size_t explore_rounds, Rng& rng, bool keep_trajectory = false);
/// The LP-perfect mixture of the true expected outcomes, every round.
RunRecord baseline_static_lp_oracle(const Instance& inst, const PolicySet& policies, Rng& rng,
                                    bool keep_trajectory = false);
RunRecord baseline_uniform_random(const Instance& inst, Rng& rng, bool keep_trajectory = false);

RunRecord run_algorithm(Algorithm algo, const Scenario& sc, const AlgorithmKnobs& knobs, Rng& rng);

/// (1 + opt/B) sqrt(d K T ln(d K T n)), O(.) constant 1. Report-only.
double theoretical_regret_bound(std::size_t n_actions, std::size_t n_resources, std::size_t horizon,
                                double budget, std::size_t n_policies, double opt);

struct ReplicateResult {
  std::uint64_t seed = 0;
  double reward = 0.0;
  std::size_t tau = 0;
  RunDiagnostics diagnostics;  // populated by mixture_elim only
};

struct Report {
  std::string scenario;
  std::string algorithm;
  std::size_t horizon = 0;
  std::vector<double> budgets;
  std::size_t n_actions = 0;
  std::size_t n_policies = 0;
  std::vector<ReplicateResult> replicates;
  double mean_reward = 0.0;
  double stddev_reward = 0.0;
  double lpopt = 0.0;
  std::optional<double> dp_opt;
  double regret_lpopt = 0.0;
  std::optional<double> regret_dp;
  double bound = 0.0;
};

/// Number of worker threads for `jobs` tasks: RCB_THREADS if set, else the
/// hardware concurrency, never more than `jobs`.
std::size_t thread_count(std::size_t jobs);

/// Replicate i uses seed base_seed + i; replicates run in parallel and are
/// reduced in index order.
Report run_experiment(const Scenario& sc, Algorithm algo, const AlgorithmKnobs& knobs, std::size_t replicates,
                      std::uint64_t base_seed);
Report run_experiment(const ExperimentConfig& config);

/// seed,reward,tau,regret_lpopt with round-trip precision.
std::string report_csv(const Report& report);
Json report_json(const Report& report);
/// Writes report.json and replicates.csv into `dir`, creating it.
void write_report(const Report& report, const std::string& dir);

}  // namespace rcb
