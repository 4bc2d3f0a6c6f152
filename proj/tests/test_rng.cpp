#include <doctest.h>

#include <cmath>
#include <vector>

#include "emproc/rng.hpp"

using namespace emproc;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // Reference vectors shipped with the Random123 distribution.
  const auto zero = philox4x32(0, 0, 0);
  CHECK(zero.words[0] == 0x6627e8d5u);
  CHECK(zero.words[1] == 0xe169c58du);
  CHECK(zero.words[2] == 0xbc57ac4cu);
  CHECK(zero.words[3] == 0x9b00dbd8u);

  const auto ones = philox4x32(~0ull, ~0ull, ~0ull);
  CHECK(ones.words[0] == 0x408f276du);
  CHECK(ones.words[1] == 0x41c83b0eu);
  CHECK(ones.words[2] == 0xa20bc7c6u);
  CHECK(ones.words[3] == 0x6d5451fdu);
}

TEST_CASE("substreams are deterministic and disjoint") {
  SubstreamRng a(42, 7);
  SubstreamRng b(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  SubstreamRng c(42, 8);
  SubstreamRng d(43, 7);
  bool differs_stream = false;
  bool differs_seed = false;
  SubstreamRng e(42, 7);
  for (int i = 0; i < 16; ++i) {
    const auto v = e.next_u64();
    if (v != c.next_u64()) differs_stream = true;
    if (v != d.next_u64()) differs_seed = true;
  }
  CHECK(differs_stream);
  CHECK(differs_seed);
}

TEST_CASE("uniforms live strictly inside (0,1) and track the draw count") {
  SubstreamRng rng(1, 0);
  double mn = 1.0, mx = 0.0, sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    mn = std::min(mn, u);
    mx = std::max(mx, u);
    sum += u;
  }
  CHECK(rng.draw_count() == static_cast<std::uint64_t>(n));
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(mn < 0.01);
  CHECK(mx > 0.99);
}

TEST_CASE("normal draws have the right first moments") {
  SubstreamRng rng(99, 3);
  const int n = 40000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.next_normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}
