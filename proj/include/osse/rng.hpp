#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace osse {

// 64-bit FNV-1a. Used for config hashes, vocab hashes and RNG substream
// derivation. Not cryptographic.
std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);

// splitmix64 step; also the mix function behind hash_u64.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t hash_u64(std::uint64_t x);

// Deterministic xoshiro256** generator. All randomness in the project flows
// from a single seed through named substreams, so identical configs replay
// identical runs on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_int(std::uint64_t bound);

  // Double in [0, 1) with 53 random bits.
  double uniform();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (deterministic, no libc rng).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derived generator for an independent named stream.
  Rng substream(std::string_view name) const;
  Rng substream(std::uint64_t index) const;

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Zipf(s) sampler over ranks 0..n-1 (rank 0 most popular), p(r) ~ (r+1)^-s.
// Inverse-CDF sampling over a precomputed cumulative table.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double s);
  std::size_t sample(Rng& rng) const;
  double probability(std::size_t rank) const;
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

}  // namespace osse
