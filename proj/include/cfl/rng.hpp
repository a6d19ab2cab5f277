#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace cfl {

// Hierarchical deterministic randomness. A stream is addressed by a master
// seed plus a derivation path; derive() folds path elements into a fresh key,
// so a child stream is independent of how much the parent has consumed.
// Generator: xoshiro256++ seeded via splitmix64 expansion of the key.
class SeedStream {
public:
  explicit SeedStream(std::uint64_t master) : key_(mix(master ^ 0x43464c3173656564ull)) {
    path_.push_back(master);
    reseed();
  }

  SeedStream derive(std::initializer_list<std::uint64_t> path) const {
    SeedStream child(*this);
    for (std::uint64_t p : path) {
      child.key_ = mix(child.key_ ^ mix(p + 0x9e3779b97f4a7c15ull));
      child.path_.push_back(p);
    }
    child.reseed();
    return child;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1), 53-bit resolution
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // unbiased integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below: n must be positive");
    const std::uint64_t lo = (-n) % n;  // 2^64 mod n
    std::uint64_t x = next_u64();
    while (x < lo) x = next_u64();
    return x % n;
  }

  int next_bit() { return static_cast<int>(next_u64() >> 63); }

  const std::vector<std::uint64_t>& path() const { return path_; }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  void reseed() {
    std::uint64_t x = key_;
    for (auto& s : s_) {
      x += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      s = z ^ (z >> 31);
    }
  }

  std::uint64_t key_ = 0;
  std::array<std::uint64_t, 4> s_{};
  std::vector<std::uint64_t> path_;
};

}  // namespace cfl
