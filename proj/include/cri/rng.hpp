#pragma once

#include <cmath>
#include <cstdint>

namespace cri {

namespace detail {

// Stafford's mix13 finalizer, the core of splitmix64.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Deterministic 64-bit generator with cheap stream derivation.  A stream is
// fully determined by (seed, stream index), so replicate b of a bootstrap can
// be generated in isolation: serial and parallel schedules produce identical
// draws.  Sequential output is splitmix64 over a mixed starting state.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(detail::mix64(seed + 0x9e3779b97f4a7c15ULL)) {}

  Rng(std::uint64_t seed, std::uint64_t stream)
      : state_(detail::mix64(detail::mix64(seed + 0x9e3779b97f4a7c15ULL) ^
                             detail::mix64(stream * 0xd6e8feb86659fd93ULL + 0xa5a5a5a5a5a5a5a5ULL))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double next_open_double() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  // Uniform integer in [0, n); multiply-shift, bias O(n/2^64).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller; the spare draw is cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_open_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Student-t(dof) via normal / sqrt(chi2/dof); chi2 from summed squares is
  // only used for small integer dof (the heavy-tail option uses dof = 5).
  double next_student_t(int dof) {
    double ss = 0.0;
    for (int i = 0; i < dof; ++i) {
      const double z = next_normal();
      ss += z * z;
    }
    return next_normal() / std::sqrt(ss / static_cast<double>(dof));
  }

private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace cri
