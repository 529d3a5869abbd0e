#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace gridres {

/// Counter-based random stream.
///
/// Draw n of stream (seed, stream_id) is splitmix64(key + n * gamma) where the
/// key is a mix of seed and stream id. Every draw is a pure function of
/// (seed, stream_id, n), so streams are reproducible bit for bit across runs,
/// platforms and thread layouts. All distributions below are implemented here
/// rather than through <random> distributions, whose algorithms are
/// implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t position() const noexcept { return counter_; }

  /// Independent child stream for a (purpose, index) pair.
  RngStream derive(std::uint64_t purpose, std::uint64_t index = 0) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  double lognormal(double mu, double sigma) noexcept;
  double gamma(double shape) noexcept;
  double beta(double a, double b) noexcept;

  template <typename T>
  void shuffle(std::span<T> values) noexcept {
    for (std::size_t i = values.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
      using std::swap;
      swap(values[i - 1], values[j]);
    }
  }

  bool operator==(const RngStream&) const = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace gridres
