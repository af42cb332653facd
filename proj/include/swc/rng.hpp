#pragma once

#include <cmath>
#include <cstdint>

namespace swc::rng {

// Splittable counter-based random stream. All randomness in the toolkit goes
// through this type so that results are reproducible bit-for-bit across
// platforms and independent of how work is scheduled across threads.
//
// The core is the splitmix64 mixer; `split(i)` derives a statistically
// independent child stream for index i, which lets per-sample work run in
// parallel while each sample sees exactly the same draws as in a serial run.
class Stream {
public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53-bit resolution
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform in (0, 1], safe as a log() argument
  double next_uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // standard normal via Box-Muller (explicit formulas, no library
  // distributions: those are implementation-defined)
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform_pos();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // independent child stream for item `index`
  Stream split(std::uint64_t index) const {
    Stream h(state_ ^ 0xd1b54a32d192ed03ull);
    h.next_u64();
    h.state_ ^= (index + 1) * 0x9e3779b97f4a7c15ull;
    h.next_u64();
    return Stream(h.next_u64());
  }

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace swc::rng
