#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace rcb {

/// Deterministic policy: the action index chosen in each context.
using PolicyTable = std::vector<std::size_t>;

/// A finite policy set that always contains exactly one null policy (the
/// policy that plays the null action in every context).
class PolicySet {
 public:
  PolicySet() = default;

  /// Validates every table and appends the null policy unless one is already
  /// present. Throws UsageError on out-of-range actions, ragged tables, or
  /// more than one null policy.
  static PolicySet with_null(std::vector<PolicyTable> tables, std::size_t n_contexts,
                             std::size_t n_actions, std::size_t null_action);

  std::size_t size() const { return tables_.size(); }
  std::size_t n_contexts() const { return n_contexts_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t null_action() const { return null_action_; }
  std::size_t null_index() const { return null_index_; }

  std::size_t action(std::size_t policy, std::size_t context) const {
    return tables_[policy][context];
  }
  const PolicyTable& operator[](std::size_t policy) const { return tables_[policy]; }
  const std::vector<PolicyTable>& tables() const { return tables_; }

 private:
  std::vector<PolicyTable> tables_;
  std::size_t n_contexts_ = 0;
  std::size_t n_actions_ = 0;
  std::size_t null_action_ = 0;
  std::size_t null_index_ = 0;
};

/// Sparse distribution over policy indices. Entries are sorted by index and
/// carry strictly positive weight.
class PolicyMixture {
 public:
  using Entry = std::pair<std::size_t, double>;

  PolicyMixture() = default;

  static PolicyMixture point_mass(std::size_t policy);
  /// Merges duplicate indices and drops non-positive weights. Throws
  /// UsageError if a weight is negative beyond 1e-12 or the total is not 1
  /// within 1e-12.
  static PolicyMixture from_entries(std::vector<Entry> entries);
  static PolicyMixture from_dense(std::span<const double> weights);

  double weight(std::size_t policy) const;
  const std::vector<Entry>& support() const { return entries_; }
  std::size_t support_size() const { return entries_.size(); }
  std::vector<double> dense(std::size_t n_policies) const;
  bool approx_equal(const PolicyMixture& other, double tol) const;

 private:
  std::vector<Entry> entries_;
};

/// theta * a + (1 - theta) * b.
PolicyMixture blend(double theta, const PolicyMixture& a, const PolicyMixture& b);

/// Expected-outcomes tuple: per-policy expected reward and expected
/// consumption of every resource (index 0 is time).
struct EOTuple {
  std::vector<double> reward;
  std::vector<std::vector<double>> consumption;

  std::size_t n_policies() const { return reward.size(); }
  std::size_t n_resources() const { return consumption.empty() ? 0 : consumption.front().size(); }
};

struct MixtureStats {
  double reward = 0.0;
  std::vector<double> consumption;
};

/// P(a|x): the probability the mixture puts on each action in `context`.
std::vector<double> induced_action_dist(const PolicyMixture& mix, const PolicySet& policies,
                                        std::size_t context);

/// Weight-averaged reward and consumption of a mixture under `mu`.
MixtureStats mixture_stats(const PolicyMixture& mix, const EOTuple& mu);

}  // namespace rcb
