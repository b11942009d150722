#pragma once

#include <cstdint>
#include <vector>

namespace vrlm {

// Counter-based reproducible random stream. Each (seed, agent) pair owns an
// independent substream; every draw advances an internal counter, so a stream
// reconstructed with the same (seed, agent) replays identical values.
// All primitives are hand-rolled (splitmix64 core, Box-Muller gaussians) so
// that outputs are bit-identical across standard libraries and platforms.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t agent_id)
      : seed_(seed), agent_(agent_id), counter_(0) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t agent_id() const { return agent_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double next_double();

  // Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t n);

  // Standard normal via Box-Muller (one value per call, no caching).
  double next_gaussian();

  // k indices from {0,...,n-1} without replacement (partial Fisher-Yates).
  // Requires k <= n. Result order is the shuffle order, not sorted.
  std::vector<long> sample_without_replacement(long n, long k);

  // k i.i.d. indices from {0,...,n-1} with replacement.
  std::vector<long> sample_with_replacement(long n, long k);

 private:
  std::uint64_t seed_;
  std::uint64_t agent_;
  std::uint64_t counter_;
};

// Pure seed-derivation function used by the sweep/repetition machinery:
// children are a deterministic function of (master, sweep index, repetition).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t sweep_index,
                          std::uint64_t repetition);

}  // namespace vrlm
