#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace uri {

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream keyed by (seed, index, stream) so draws never depend on the order
/// in which indices are processed. Only engine output is used, never the
/// library distributions, so sequences are identical across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream)
      : engine_(splitmix(splitmix(seed) ^ splitmix(index * 2 + 1) ^ splitmix(~stream))) {}

  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace uri
