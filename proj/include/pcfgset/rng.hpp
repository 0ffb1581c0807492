#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace pcfgset {

// splitmix64 finaliser; used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded generator that can hand out deterministic substreams, so work split
// across shards or candidates does not depend on scheduling order.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  Engine& engine() noexcept { return engine_; }

  Rng substream(std::uint64_t index) const { return Rng(mix64(seed_ ^ mix64(index + 1))); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  // Draws an index with probability proportional to weights[i].
  std::size_t categorical(const std::vector<double>& weights);

  // Symmetric Dirichlet draw of the given dimension.
  std::vector<double> dirichlet(std::size_t dim, double alpha);

  template <typename It>
  void shuffle(It first, It last) {
    std::shuffle(first, last, engine_);
  }

 private:
  std::uint64_t seed_;
  Engine engine_;
};

}  // namespace pcfgset
