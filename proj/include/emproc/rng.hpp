#pragma once

#include <array>
#include <cstdint>

namespace emproc {

// Philox-4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw 2011).
// A draw is addressed by (key, counter); substreams are carved out by placing
// a 64-bit stream id in the high counter words and a 64-bit block index in the
// low ones. Disjoint stream ids give independent streams, and a sample is
// reproducible from (seed, stream, block) alone, which is what makes parallel
// and serial Monte Carlo runs agree bit for bit.

struct PhiloxBlock {
  std::array<std::uint32_t, 4> words;
};

inline PhiloxBlock philox4x32(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t block) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::uint32_t x0 = static_cast<std::uint32_t>(block);
  std::uint32_t x1 = static_cast<std::uint32_t>(block >> 32);
  std::uint32_t x2 = static_cast<std::uint32_t>(stream);
  std::uint32_t x3 = static_cast<std::uint32_t>(stream >> 32);
  std::uint32_t k0 = static_cast<std::uint32_t>(seed);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);

  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t y0 = hi1 ^ x1 ^ k0;
    const std::uint32_t y1 = lo1;
    const std::uint32_t y2 = hi0 ^ x3 ^ k1;
    const std::uint32_t y3 = lo0;
    x0 = y0;
    x1 = y1;
    x2 = y2;
    x3 = y3;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return PhiloxBlock{{x0, x1, x2, x3}};
}

// One substream of the counter-based generator. Cheap to construct; state is
// just (seed, stream, position). Draw counting is kept here so a run can
// report exactly how many variates it consumed (oracle runs must report 0).
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64() {
    if (pos_ == 0) {
      block_ = philox4x32(seed_, stream_, next_block_++);
    }
    const auto& w = block_.words;
    std::uint64_t out;
    if (pos_ == 0) {
      out = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
      pos_ = 1;
    } else {
      out = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
      pos_ = 0;
    }
    ++draws_;
    return out;
  }

  // Uniform on the open interval (0,1); never returns an exact endpoint, so
  // quantile transforms stay finite.
  double next_uniform() {
    const std::uint64_t bits = next_u64() >> 11;  // 53 significant bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the inverse CDF; one uniform per variate, so the
  // draw count per replication is a fixed function of the configuration.
  double next_normal();

  std::uint64_t draw_count() const { return draws_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t next_block_ = 0;
  PhiloxBlock block_{};
  int pos_ = 0;
  std::uint64_t draws_ = 0;
};

}  // namespace emproc
