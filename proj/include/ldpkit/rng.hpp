#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace ldpkit {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11 constants).
// Stateless: a 128-bit counter and 64-bit key go in, 128 random bits come out,
// so independent substreams are just disjoint key/counter assignments and any
// path can be regenerated in isolation (batch == sequence of single runs).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// One logical noise stream: (seed, substream name) pick the key, stream_id
// (e.g. the path index) occupies the high counter words, the draw index the
// low ones. gaussian(draw) is a pure function of (key, stream_id, draw).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::string_view substream, std::uint64_t stream_id);

  double uniform(std::uint64_t draw) const;   // in (0,1)
  double gaussian(std::uint64_t draw) const;  // standard normal

  std::uint64_t stream_id() const { return stream_; }

 private:
  std::array<double, 2> gauss_block(std::uint64_t block) const;
  std::array<std::uint32_t, 4> bits(std::uint64_t block, std::uint32_t domain) const;

  std::uint64_t key_ = 0;
  std::uint64_t stream_ = 0;
};

}  // namespace ldpkit
