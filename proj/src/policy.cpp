#include "rcb/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rcb/error.hpp"

namespace rcb {

namespace {
constexpr double kWeightTol = 1e-12;
}

PolicySet PolicySet::with_null(std::vector<PolicyTable> tables, std::size_t n_contexts,
                               std::size_t n_actions, std::size_t null_action) {
  if (n_contexts == 0 || n_actions == 0) throw UsageError("policy set: empty context or action space");
  if (null_action >= n_actions) throw UsageError("policy set: null action out of range");

  PolicySet set;
  set.n_contexts_ = n_contexts;
  set.n_actions_ = n_actions;
  set.null_action_ = null_action;

  std::size_t null_count = 0;
  std::size_t null_at = 0;
  for (std::size_t p = 0; p < tables.size(); ++p) {
    const auto& table = tables[p];
    if (table.size() != n_contexts) {
      throw UsageError("policy " + std::to_string(p) + ": expected " + std::to_string(n_contexts) +
                       " contexts, got " + std::to_string(table.size()));
    }
    bool all_null = true;
    for (std::size_t x = 0; x < n_contexts; ++x) {
      if (table[x] >= n_actions) {
        throw UsageError("policy " + std::to_string(p) + ": action " + std::to_string(table[x]) +
                         " out of range at context " + std::to_string(x));
      }
      all_null = all_null && table[x] == null_action;
    }
    if (all_null) {
      ++null_count;
      null_at = p;
    }
  }
  if (null_count > 1) throw UsageError("policy set: more than one null policy");

  set.tables_ = std::move(tables);
  if (null_count == 1) {
    set.null_index_ = null_at;
  } else {
    set.null_index_ = set.tables_.size();
    set.tables_.emplace_back(n_contexts, null_action);
  }
  return set;
}

PolicyMixture PolicyMixture::point_mass(std::size_t policy) {
  PolicyMixture m;
  m.entries_.emplace_back(policy, 1.0);
  return m;
}

PolicyMixture PolicyMixture::from_entries(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  PolicyMixture m;
  double total = 0.0;
  for (const auto& [idx, w] : entries) {
    if (w < -kWeightTol) throw UsageError("mixture: negative weight " + std::to_string(w));
    total += w;
    if (w <= 0.0) continue;
    if (!m.entries_.empty() && m.entries_.back().first == idx) {
      m.entries_.back().second += w;
    } else {
      m.entries_.emplace_back(idx, w);
    }
  }
  if (std::abs(total - 1.0) > kWeightTol) {
    throw UsageError("mixture: weights sum to " + std::to_string(total));
  }
  return m;
}

PolicyMixture PolicyMixture::from_dense(std::span<const double> weights) {
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] != 0.0) entries.emplace_back(i, weights[i]);
  }
  return from_entries(std::move(entries));
}

double PolicyMixture::weight(std::size_t policy) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), policy,
                             [](const Entry& e, std::size_t p) { return e.first < p; });
  return (it != entries_.end() && it->first == policy) ? it->second : 0.0;
}

std::vector<double> PolicyMixture::dense(std::size_t n_policies) const {
  std::vector<double> out(n_policies, 0.0);
  for (const auto& [idx, w] : entries_) out.at(idx) = w;
  return out;
}

bool PolicyMixture::approx_equal(const PolicyMixture& other, double tol) const {
  std::size_t i = 0, j = 0;
  while (i < entries_.size() || j < other.entries_.size()) {
    if (j == other.entries_.size() ||
        (i < entries_.size() && entries_[i].first < other.entries_[j].first)) {
      if (entries_[i].second > tol) return false;
      ++i;
    } else if (i == entries_.size() || other.entries_[j].first < entries_[i].first) {
      if (other.entries_[j].second > tol) return false;
      ++j;
    } else {
      if (std::abs(entries_[i].second - other.entries_[j].second) > tol) return false;
      ++i;
      ++j;
    }
  }
  return true;
}

PolicyMixture blend(double theta, const PolicyMixture& a, const PolicyMixture& b) {
  if (theta < 0.0 || theta > 1.0) throw UsageError("blend: theta outside [0,1]");
  std::vector<PolicyMixture::Entry> entries;
  entries.reserve(a.support_size() + b.support_size());
  for (const auto& [idx, w] : a.support()) entries.emplace_back(idx, theta * w);
  for (const auto& [idx, w] : b.support()) entries.emplace_back(idx, (1.0 - theta) * w);
  return PolicyMixture::from_entries(std::move(entries));
}

std::vector<double> induced_action_dist(const PolicyMixture& mix, const PolicySet& policies,
                                        std::size_t context) {
  if (context >= policies.n_contexts()) throw UsageError("induced_action_dist: context out of range");
  std::vector<double> dist(policies.n_actions(), 0.0);
  for (const auto& [idx, w] : mix.support()) dist[policies.action(idx, context)] += w;
  return dist;
}

MixtureStats mixture_stats(const PolicyMixture& mix, const EOTuple& mu) {
  MixtureStats s;
  s.consumption.assign(mu.n_resources(), 0.0);
  for (const auto& [idx, w] : mix.support()) {
    s.reward += w * mu.reward.at(idx);
    const auto& c = mu.consumption[idx];
    for (std::size_t i = 0; i < c.size(); ++i) s.consumption[i] += w * c[i];
  }
  return s;
}

}  // namespace rcb
