#include "gridres/rng.hpp"

#include <cmath>
#include <numbers>

namespace gridres {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed),
      stream_id_(stream_id),
      key_(splitmix64(splitmix64(seed + kGamma) ^ splitmix64(stream_id * 0xD1B54A32D192ED03ULL + 1))) {}

RngStream RngStream::derive(std::uint64_t purpose, std::uint64_t index) const noexcept {
  std::uint64_t child = splitmix64(stream_id_ ^ splitmix64(purpose * kGamma + 0x632BE59BD9B4E019ULL));
  child = splitmix64(child + index * 0xA0761D6478BD642FULL);
  return RngStream(seed_, child);
}

std::uint64_t RngStream::next_u64() noexcept {
  ++counter_;
  return splitmix64(key_ + counter_ * kGamma);
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  if (hi <= lo) return lo;
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  if (range == 0) return static_cast<std::int64_t>(next_u64());
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  std::uint64_t draw = next_u64();
  while (draw >= limit) draw = next_u64();
  return lo + static_cast<std::int64_t>(draw % range);
}

double RngStream::normal() noexcept {
  // Box-Muller, one variate per call so a draw never depends on hidden state.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::lognormal(double mu, double sigma) noexcept {
  return std::exp(mu + sigma * normal());
}

double RngStream::gamma(double shape) noexcept {
  // Marsaglia-Tsang; shape < 1 handled by the boost u^(1/shape).
  if (shape < 1.0) {
    const double u = 1.0 - uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = 1.0 - uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::beta(double a, double b) noexcept {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

}  // namespace gridres
