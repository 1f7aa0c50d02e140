#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "../numfmt.hpp"
#include "squeezesim/errors.hpp"
#include "squeezesim/simulate.hpp"

namespace squeezesim::simulate {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'Q', 'Z', 'T', 'R', 'A', 'C', 'E'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "binary traces assume a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw ValidationError("truncated binary trace");
  return v;
}

void write_binary(std::ostream& os, double dt, std::uint64_t seed,
                  std::initializer_list<const std::vector<double>*> channels) {
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(channels.size()));
  put<double>(os, dt);
  put<std::uint64_t>(os, (*channels.begin())->size());
  put<std::uint64_t>(os, seed);
  for (const auto* ch : channels)
    os.write(reinterpret_cast<const char*>(ch->data()), static_cast<std::streamsize>(ch->size() * sizeof(double)));
  if (!os) throw ValidationError("failed writing binary trace");
}

}  // namespace

void write_trace_csv(std::ostream& os, const QuadratureTrace& trace) {
  using squeezesim::detail::num;
  os << "t_s,x1_m,x2_m\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    os << num(static_cast<double>(i) * trace.dt) << ',' << num(trace.x1[i]) << ',' << num(trace.x2[i]) << '\n';
}

void write_trace_csv(std::ostream& os, const PositionTrace& trace) {
  using squeezesim::detail::num;
  os << "t_s,x_m\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    os << num(static_cast<double>(i) * trace.dt) << ',' << num(trace.x[i]) << '\n';
}

void write_trace_binary(std::ostream& os, const QuadratureTrace& trace) {
  write_binary(os, trace.dt, trace.seed, {&trace.x1, &trace.x2});
}

void write_trace_binary(std::ostream& os, const PositionTrace& trace) {
  write_binary(os, trace.dt, trace.seed, {&trace.x});
}

BinaryTrace read_trace_binary(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw ValidationError("not a squeezesim binary trace");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw ValidationError("unsupported binary trace version");
  const auto n_channels = get<std::uint32_t>(is);
  if (n_channels == 0 || n_channels > 16) throw ValidationError("bad channel count in binary trace");
  BinaryTrace out;
  out.dt = get<double>(is);
  const auto length = get<std::uint64_t>(is);
  out.seed = get<std::uint64_t>(is);
  if (length > (std::uint64_t{1} << 34)) throw ValidationError("implausible binary trace length");
  out.channels.assign(n_channels, std::vector<double>(length));
  for (auto& ch : out.channels) {
    if (!is.read(reinterpret_cast<char*>(ch.data()), static_cast<std::streamsize>(length * sizeof(double))))
      throw ValidationError("truncated binary trace");
  }
  return out;
}

}  // namespace squeezesim::simulate
