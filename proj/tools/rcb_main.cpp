// rcb: run experiments on resourceful contextual bandit instances.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rcb/discretize.hpp"
#include "rcb/error.hpp"
#include "rcb/harness.hpp"
#include "rcb/io.hpp"
#include "rcb/lp.hpp"

namespace {

struct Overrides {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  std::string out;
  std::string algo;
  double c0 = 0.0;
  std::size_t samples_m = 0;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Base seed; replicate i uses seed + i");
  cmd->add_option("--replicates", o.replicates, "Number of replicates");
  cmd->add_option("--out", o.out, "Output directory for report.json and replicates.csv");
  cmd->add_option("--c0", o.c0, "Confidence-radius constant for mixture_elim");
  cmd->add_option("--samples-M", o.samples_m, "Sampled tuples per round for mixture_elim");
}

rcb::ExperimentConfig load_config(const Overrides& o, const CLI::App& cmd) {
  rcb::ExperimentConfig cfg = rcb::config_from_json(rcb::load_json_file(o.config));
  if (cmd.count("--seed")) cfg.seed = o.seed;
  if (cmd.count("--replicates")) {
    if (o.replicates == 0) throw rcb::UsageError("--replicates must be at least 1");
    cfg.replicates = o.replicates;
  }
  if (cmd.count("--out")) cfg.out = o.out;
  if (!o.algo.empty()) cfg.algorithm = rcb::parse_algorithm(o.algo);
  if (cmd.count("--c0")) cfg.knobs.mixture_elim.c0 = o.c0;
  if (cmd.count("--samples-M")) cfg.knobs.mixture_elim.samples_m = o.samples_m;
  return cfg;
}

void print_summary(const rcb::Report& r) {
  std::printf("%-22s mean %10.3f  sd %8.3f  LPOPT %10.3f  regret %9.3f", r.algorithm.c_str(), r.mean_reward,
              r.stddev_reward, r.lpopt, r.regret_lpopt);
  if (r.dp_opt) std::printf("  OPT %9.3f", *r.dp_opt);
  std::printf("\n");
}

int cmd_run(const Overrides& o, const CLI::App& cmd) {
  const auto cfg = load_config(o, cmd);
  const auto report = rcb::run_experiment(cfg);
  print_summary(report);
  std::printf("bound (constant 1): %.3f\n", report.bound);
  if (!cfg.out.empty()) {
    rcb::write_report(report, cfg.out);
    std::printf("wrote %s\n", cfg.out.c_str());
  }
  return 0;
}

int cmd_compare(const Overrides& o, const CLI::App& cmd) {
  const auto cfg = load_config(o, cmd);
  const auto sc = rcb::build_scenario(cfg.instance_spec);
  std::printf("%s: T=%zu, %zu replicates from seed %llu\n", sc.name.c_str(), sc.inst.horizon, cfg.replicates,
              static_cast<unsigned long long>(cfg.seed));
  for (auto algo : rcb::all_algorithms()) {
    const auto report = rcb::run_experiment(sc, algo, cfg.knobs, cfg.replicates, cfg.seed);
    print_summary(report);
    if (!cfg.out.empty()) rcb::write_report(report, cfg.out + "/" + report.algorithm);
  }
  return 0;
}

int cmd_sweep(const std::string& path) {
  const rcb::Json j = rcb::load_json_file(path);
  rcb::require_schema(j, "");
  const auto model = rcb::pricing_from_json(rcb::require_field(j, "model", ""), "/model");
  const double B = rcb::json_number(rcb::require_field(j, "budget", ""), "/budget");
  const std::size_t T = rcb::json_index(rcb::require_field(j, "horizon", ""), "/horizon");
  std::vector<rcb::PricePolicy> policies;
  const auto& jp = rcb::require_field(j, "policies", "");
  for (std::size_t p = 0; p < jp.size(); ++p) {
    rcb::PricePolicy pi;
    for (std::size_t x = 0; x < jp[p].size(); ++x) {
      pi.prices.push_back(rcb::json_number(jp[p][x], "/policies/" + std::to_string(p) + "/" + std::to_string(x)));
    }
    policies.push_back(std::move(pi));
  }
  std::vector<double> eps_list;
  if (j.contains("eps")) {
    for (std::size_t k = 0; k < j["eps"].size(); ++k) eps_list.push_back(rcb::json_number(j["eps"][k], "/eps/" + std::to_string(k)));
  } else {
    eps_list = {0.25, 0.125, 0.0625};
  }
  const auto star = rcb::epsilon_star(B, model.lipschitz, static_cast<double>(T), policies.size());
  std::printf("eps* = %.6f%s   regret bound (constant 1) = %.3f\n", star.eps, star.clamped ? " (clamped)" : "",
              rcb::discretization_regret_bound(static_cast<double>(T), B, model.lipschitz, policies.size()));
  std::printf("%8s %8s %4s %10s %10s %10s  %s\n", "eps", "delta", "|Pe|", "LP(Pi)", "LP(Pi_e)", "LP(Phi)", "checks");
  bool all_ok = true;
  for (double eps : eps_list) {
    const auto r = rcb::check_discretization_bounds(model, policies, eps, B, T);
    all_ok = all_ok && r.ok();
    std::printf("%8.4f %8.4f %4zu %10.4f %10.4f %10.4f  P1=%d P2=%d phi=%d eps=%d (lemma1=%d)\n", eps, r.delta,
                r.n_discretized, r.lpopt_pi, r.lpopt_eps, r.lpopt_phi, r.p1_ok, r.p2_ok, r.phi_gap_ok, r.eps_gap_ok,
                r.lemma1_ok);
  }
  return all_ok ? 0 : 1;
}

int cmd_lb_demo(std::size_t K, std::size_t T, std::size_t B, std::size_t replicates, std::uint64_t seed) {
  std::vector<rcb::Scenario> scenarios;
  auto make = [&](rcb::LowerBoundVariant v, std::string name) {
    auto [inst, pol] = rcb::gen_lower_bound_instance(K, T, B, v, true);
    scenarios.push_back({std::move(name), std::move(inst), std::move(pol)});
  };
  make(rcb::LowerBoundZero{}, "F_0");
  for (std::size_t i = 2; i <= K; ++i) {
    for (std::size_t j = 1; j <= T / B; ++j) make(rcb::LowerBoundCell{i, j}, "F_" + std::to_string(i) + "," + std::to_string(j));
  }
  std::printf("lower-bound family K=%zu T=%zu B=%zu (B <= sqrt(KT)/2 = %.3f)\n", K, T, B,
              std::sqrt(static_cast<double>(K * T)) / 2.0);
  const rcb::AlgorithmKnobs knobs;
  for (const auto& sc : scenarios) {
    std::printf("%s\n", sc.name.c_str());
    for (auto algo : rcb::all_algorithms()) {
      auto k = knobs;
      k.explore_rounds = std::min<std::size_t>(k.explore_rounds, T / 2);
      print_summary(rcb::run_experiment(sc, algo, k, replicates, seed));
    }
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  const rcb::Json j = rcb::load_json_file(path);
  if (j.contains("instance")) {
    const auto cfg = rcb::config_from_json(j);
    const auto sc = rcb::build_scenario(cfg.instance_spec);
    std::printf("ok: %s, %zu contexts, %zu actions, %zu policies, T=%zu\n", sc.name.c_str(), sc.inst.n_contexts(),
                sc.inst.n_actions, sc.policies.size(), sc.inst.horizon);
    return 0;
  }
  if (j.contains("model")) {
    rcb::require_valid_model(rcb::pricing_from_json(j["model"], "/model"));
    std::printf("ok: pricing sweep\n");
    return 0;
  }
  if (j.contains("sales_rate")) {
    rcb::require_valid_model(rcb::pricing_from_json(j));
    std::printf("ok: pricing model\n");
    return 0;
  }
  const auto inst = rcb::instance_from_json(j);
  const auto v = rcb::validate_instance(inst);
  for (const auto& e : v) std::printf("%s: %s\n", e.location.c_str(), e.message.c_str());
  if (!v.empty()) return 1;
  std::printf("ok: instance\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments for resourceful contextual bandits"};
  app.require_subcommand(1);

  Overrides run_o, cmp_o;
  auto* run = app.add_subcommand("run", "Run one algorithm over replicates");
  add_common(run, run_o);
  run->add_option("--algo", run_o.algo, "mixture_elim | explore_then_exploit | static_lp_oracle | uniform_random");

  auto* compare = app.add_subcommand("compare", "Run every algorithm on the same seeds");
  add_common(compare, cmp_o);

  std::string sweep_path;
  auto* sweep = app.add_subcommand("discretize-sweep", "Check discretization bounds over a list of eps");
  sweep->add_option("--config", sweep_path, "Sweep config (JSON)")->required()->check(CLI::ExistingFile);

  std::size_t lb_k = 2, lb_t = 8, lb_b = 2, lb_reps = 20;
  std::uint64_t lb_seed = 1;
  auto* lb = app.add_subcommand("lb-demo", "Lower-bound family: rewards on F_0 and every F_{i,j}");
  lb->add_option("--arms", lb_k, "K");
  lb->add_option("--horizon", lb_t, "T");
  lb->add_option("--budget", lb_b, "B (must divide T and satisfy B <= sqrt(KT)/2)");
  lb->add_option("--replicates", lb_reps, "Replicates per algorithm");
  lb->add_option("--seed", lb_seed, "Base seed");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config, instance, or pricing model");
  validate->add_option("--config", validate_path, "JSON file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_o, *run);
    if (*compare) return cmd_compare(cmp_o, *compare);
    if (*sweep) return cmd_sweep(sweep_path);
    if (*lb) return cmd_lb_demo(lb_k, lb_t, lb_b, lb_reps, lb_seed);
    if (*validate) return cmd_validate(validate_path);
  } catch (const rcb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
