#include "mimocal/rng.hpp"

#include <cmath>
#include <numbers>

namespace mimocal {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// FNV-1a over the label bytes; collision quality is plenty for stream labels.
std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t Rng::mix(std::uint64_t z) {
  // splitmix64 finalizer.
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix(key_ + counter_ * kGolden);
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

void Rng::normal_pair(double& z0, double& z1) {
  const double u1 = uniform_open();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(t);
  z1 = r * std::sin(t);
}

std::complex<double> Rng::complex_gaussian_unit() {
  // Component std-dev 1/sqrt(2) so E|z|^2 = 1. Folding the 1/2 into the
  // Box-Muller radius keeps CN(0,v) = sqrt(v) * unit draw exact.
  const double u1 = uniform_open();
  const double u2 = uniform01();
  const double r = std::sqrt(-std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

Rng Rng::child(std::string_view label) const {
  return Rng(mix(key_ ^ mix(hash_label(label) + kGolden)), 0);
}

Rng Rng::child(std::uint64_t index) const {
  return Rng(mix(key_ ^ mix(index * kGolden + 0x5851f42d4c957f2dULL)), 0);
}

Rng Rng::child(std::string_view label, std::uint64_t index) const {
  return child(label).child(index);
}

}  // namespace mimocal
