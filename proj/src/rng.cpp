#include "aspr/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace aspr {

namespace {

// splitmix64 finalizer, used to decorrelate (seed, stream) pairs before
// handing a single 64-bit value to the engine.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      engine_(mix64(mix64(seed) ^ mix64(~stream_id))) {}

RngStream RngStream::split(std::uint64_t key) const {
  return RngStream(seed_, mix64(stream_id_ ^ (0x9e3779b97f4a7c15ULL * (key + 1))));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
  // 53 significant bits; +0.5 keeps the result strictly inside (0,1).
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
  return -std::log(uniform()) / rate;
}

}  // namespace aspr
