#pragma once

#include <array>
#include <cstdint>

namespace squeezesim {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based generator keyed by (seed, stream). Two generators with the
/// same seed but different streams never share output, so parallel sweep
/// cells can each own one without coordination.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform on (0, 1), 53-bit resolution, never exactly 0 or 1.
  double uniform();
  /// Standard normal via Box-Muller; deterministic across platforms given
  /// an IEEE libm.
  double normal();

private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;  // 32-bit words consumed from buffer_
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Well-known stream ids so each noise source is reproducible independently.
namespace streams {
inline constexpr std::uint64_t force_x1 = 1;
inline constexpr std::uint64_t force_x2 = 2;
inline constexpr std::uint64_t thermal_position = 3;
inline constexpr std::uint64_t initial_state = 4;
inline constexpr std::uint64_t synthetic = 100;
}  // namespace streams

}  // namespace squeezesim
