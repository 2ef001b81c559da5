#include "ldpkit/rng.hpp"

#include <cmath>

#include "ldpkit/util.hpp"

namespace ldpkit {

namespace {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = std::uint64_t(a) * b;
  hi = std::uint32_t(p >> 32);
  lo = std::uint32_t(p);
}

inline double u64_to_unit(std::uint64_t v) {
  // 53 mantissa bits; offset keeps the value strictly inside (0,1).
  return (double(v >> 11) + 0.5) * 0x1p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(M0, ctr[0], hi0, lo0);
    mulhilo(M1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

NoiseStream::NoiseStream(std::uint64_t seed, std::string_view substream, std::uint64_t stream_id)
    : key_(splitmix64(seed) ^ fnv1a64(substream)), stream_(stream_id) {}

std::array<std::uint32_t, 4> NoiseStream::bits(std::uint64_t block, std::uint32_t domain) const {
  // Layout: 56-bit draw-block counter + 8-bit domain tag | 64-bit stream id.
  return philox4x32({std::uint32_t(block), std::uint32_t(block >> 32) | (domain << 24),
                     std::uint32_t(stream_), std::uint32_t(stream_ >> 32)},
                    {std::uint32_t(key_), std::uint32_t(key_ >> 32)});
}

double NoiseStream::uniform(std::uint64_t draw) const {
  auto r = bits(draw >> 1, 1u);
  std::uint64_t w = (draw & 1) ? (std::uint64_t(r[2]) << 32 | r[3])
                               : (std::uint64_t(r[0]) << 32 | r[1]);
  return u64_to_unit(w);
}

std::array<double, 2> NoiseStream::gauss_block(std::uint64_t block) const {
  auto r = bits(block, 2u);
  double u1 = u64_to_unit(std::uint64_t(r[0]) << 32 | r[1]);
  double u2 = u64_to_unit(std::uint64_t(r[2]) << 32 | r[3]);
  double rad = std::sqrt(-2.0 * std::log(u1));
  return {rad * std::cos(2.0 * M_PI * u2), rad * std::sin(2.0 * M_PI * u2)};
}

double NoiseStream::gaussian(std::uint64_t draw) const {
  return gauss_block(draw >> 1)[draw & 1];
}

}  // namespace ldpkit
