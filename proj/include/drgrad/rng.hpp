#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace drgrad {

// Deterministic random source. A (seed, stream) pair fully determines the
// draw sequence: the engine is mt19937_64 and the uniform/integer draws below
// are pure bit manipulation, so they do not depend on the standard library's
// distribution implementations.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::string_view stream);

  std::uint64_t seed() const { return seed_; }
  const std::string& stream() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit mantissa.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Integer in [lo, hi], both ends inclusive, unbiased via rejection.
  std::int64_t randint(std::int64_t lo, std::int64_t hi);
  // Normal with given mean and standard deviation (Box-Muller, two draws
  // per call so the consumption pattern is fixed).
  double normal(double mean, double stddev);
  // Glorot-style symmetric uniform given fan-in/fan-out.
  double glorot_uniform(std::size_t fan_in, std::size_t fan_out);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(randint(0, static_cast<std::int64_t>(i)));
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::string stream_;
  std::mt19937_64 engine_;
};

}  // namespace drgrad
