#ifndef SEQCDM_RNG_HPP
#define SEQCDM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace seqcdm {

namespace detail {

// SplitMix64 finaliser; used only to derive child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Seeded pseudo-random stream. Equal seeds give identical draw sequences;
/// split(i) yields a child stream that depends only on (seed, i).
class RngStream {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    engine_.seed(seq);
  }

  RngStream split(std::uint64_t index) const {
    return RngStream(detail::mix64(detail::mix64(seed_) ^ detail::mix64(~index)));
  }

  std::uint64_t seed() const noexcept { return seed_; }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    double u;
    do u = std::generate_canonical<double, 53>(engine_);
    while (u <= 0.0);
    return u;
  }

  double normal() { return std_normal_(engine_); }

  double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }

  /// Gamma(shape, 1).
  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

  /// log of a Gamma(shape, 1) variate; stays finite for tiny shapes where the
  /// variate itself underflows (uses G(a) = G(a+1) U^{1/a}).
  double log_gamma_variate(double shape) {
    if (shape >= 1.0) return std::log(gamma(shape));
    const double g = gamma(shape + 1.0);
    return std::log(g) + std::log(uniform()) / shape;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
};

}  // namespace seqcdm

#endif  // SEQCDM_RNG_HPP
