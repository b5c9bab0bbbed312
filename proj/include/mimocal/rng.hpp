// Counter-based splittable random generator.
//
// Requirements this type exists to satisfy:
//  - the same 64-bit seed produces a bit-identical u64 stream on every
//    platform (pure integer mixing, no std:: distributions);
//  - child streams are derived from (key, label) without consuming state, so
//    sub-streams are independent of draw order elsewhere;
//  - complex Gaussian draws scale exactly: a CN(0,v) draw is sqrt(v) times
//    the CN(0,1) draw of a matched stream.
#ifndef MIMOCAL_RNG_HPP
#define MIMOCAL_RNG_HPP

#include <complex>
#include <cstdint>
#include <string_view>

namespace mimocal {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kDomainSalt)), counter_(0) {}

  // Next 64 random bits; advances this stream only.
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01();

  // Uniform on (0, 1]; safe to pass to log().
  double uniform_open();

  // Standard normal pair via Box-Muller (consumes exactly two u64).
  void normal_pair(double& z0, double& z1);

  // One CN(0,1) draw: independent real/imag parts, variance 1/2 each.
  std::complex<double> complex_gaussian_unit();

  // Derive an independent stream from (key, label). Does not touch state:
  // children taken before or after draws on *this are identical.
  Rng child(std::string_view label) const;
  Rng child(std::uint64_t index) const;
  Rng child(std::string_view label, std::uint64_t index) const;

  std::uint64_t key() const { return key_; }

 private:
  explicit Rng(std::uint64_t key, int) : key_(key), counter_(0) {}

  static std::uint64_t mix(std::uint64_t z);

  static constexpr std::uint64_t kDomainSalt = 0x6d696d6f63616c00ULL;

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace mimocal

#endif  // MIMOCAL_RNG_HPP
