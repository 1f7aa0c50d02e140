#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "squeezesim/rng.hpp"
#include "support.hpp"

using squeezesim::CounterRng;
using squeezesim::philox4x32;

TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32(A4{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, A2{0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32(A4{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, A2{0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("generator is a pure function of seed and stream") {
  CounterRng a(42, 1), b(42, 1), c(42, 2), d(43, 1);
  std::vector<std::uint64_t> va, vc, vd;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    va.push_back(x);
    vc.push_back(c.next_u64());
    vd.push_back(d.next_u64());
  }
  CHECK(va != vc);
  CHECK(va != vd);
  std::set<std::uint64_t> all(va.begin(), va.end());
  all.insert(vc.begin(), vc.end());
  CHECK(all.size() == 128);
}

TEST_CASE("uniform stays in the open unit interval with the right moments") {
  CounterRng r(7, squeezesim::streams::synthetic);
  std::vector<double> u(200000);
  for (auto& x : u) {
    x = r.uniform();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
  }
  const double se = std::sqrt(1.0 / 12.0 / u.size());
  CHECK(std::abs(testing::mean(u) - 0.5) < 5 * se);
  CHECK(testing::variance(u) == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("normal deviates: moments and tail fraction") {
  CounterRng r(9, squeezesim::streams::force_x1);
  const std::size_t n = 400000;
  std::vector<double> z(n);
  std::size_t beyond2 = 0;
  double m4 = 0.0;
  for (auto& x : z) {
    x = r.normal();
    if (std::abs(x) > 2.0) ++beyond2;
    m4 += x * x * x * x;
  }
  CHECK(std::abs(testing::mean(z)) < 5.0 / std::sqrt(double(n)));
  CHECK(testing::variance(z) == doctest::Approx(1.0).epsilon(5 * std::sqrt(2.0 / n)));
  CHECK(m4 / n == doctest::Approx(3.0).epsilon(0.02));
  // P(|z| > 2) = erfc(sqrt 2)
  const double p = std::erfc(std::sqrt(2.0));
  CHECK(double(beyond2) / n == doctest::Approx(p).epsilon(5 * std::sqrt(p * (1 - p) / n) / p));
}
