#pragma once

#include <array>
#include <cstdint>

namespace tndve {

// Philox4x32-10 (Salmon et al. 2011). Stateless: every draw is a pure
// function of (key, counter), so streams can be split by index without
// coordination between threads.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept {
  constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += w0;
      key[1] += w1;
    }
    std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
    std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

// Variable tags separating the streams drawn for one record.
enum class Stream : std::uint32_t {
  Covariate = 1,
  Confounder = 2,
  Vaccination = 3,
  Infection = 4,
  Testing = 5,
  Resample = 6,
};

// Uniform draws keyed by (seed, replicate, record, tag). Each call yields two
// doubles in (0, 1) with 53-bit resolution.
class KeyedUniform {
 public:
  explicit constexpr KeyedUniform(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  std::array<double, 2> pair(std::uint64_t replicate, std::uint64_t record, Stream tag) const noexcept {
    PhiloxCounter c{static_cast<std::uint32_t>(record), static_cast<std::uint32_t>(record >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(replicate)};
    PhiloxCounter r = philox4x32(c, key_);
    // replicate indices above 2^32 fold their high word into the tag lane
    if (replicate >> 32) {
      c[2] ^= static_cast<std::uint32_t>(replicate >> 32) << 8;
      r = philox4x32(c, key_);
    }
    return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
  }

  double operator()(std::uint64_t replicate, std::uint64_t record, Stream tag) const noexcept {
    return pair(replicate, record, tag)[0];
  }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    std::uint64_t bits = (std::uint64_t{hi} << 21) ^ (lo >> 11);
    return (static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1p-53;
  }

  PhiloxKey key_;
};

}  // namespace tndve
