#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace rcb {

/// Counter-based random stream. The n-th output is a pure function of
/// (key, n), so a stream can be reproduced or split without shared state.
/// Output values are identical on every platform, which the harness relies
/// on for byte-identical CSV files.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  /// Draws an index with probability proportional to `probs` (assumed to sum
  /// to 1; the last positive entry absorbs rounding).
  std::size_t categorical(std::span<const double> probs);

  /// Independent child stream; `split(i)` is deterministic in (key, i).
  Rng split(std::uint64_t stream) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter, int) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace rcb
