#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace ri2d {

// Counter-based stream RNG (Philox 4x32, 10 rounds).  A stream is addressed
// by (seed, stream id); the 128-bit counter keeps the draw index in its low
// half and the stream id in its high half, so distinct streams are disjoint
// counter subspaces under the same key.  Walk i of a run always uses stream i
// of the run's master seed: results are reproducible and independent of
// scheduling or worker count.
class Rng {
 public:
  Rng() : Rng(0, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // 53-bit uniform in [0,1).
  double u01();
  // Unbiased uniform in {0,...,n-1}, n >= 1 (rejection).
  std::uint32_t below(std::uint32_t n);
  // Exp(1) via inversion; strictly positive.
  double exponential();
  // Standard normal (polar method).
  double normal();
  // Exact Poisson(mean): product method for small means, binary splitting
  // (Poisson additivity) above it.
  std::uint64_t poisson(double mean);

  // Derived child stream, deterministic in (parent stream, child index).
  Rng child(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();
  std::uint64_t seed_ = 0, stream_ = 0;
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int bufpos_ = 4;
};

// Walker alias table for O(1) draws from a fixed discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(const std::vector<double>& weights);
  std::size_t sample(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace ri2d
