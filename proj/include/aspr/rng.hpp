#pragma once

#include <cstdint>
#include <random>

namespace aspr {

// Seeded, splittable random stream. A stream is identified by the pair
// (seed, stream id); constructing the same pair always reproduces the same
// draw sequence. Substreams obtained through split() do not share state with
// the parent, so independent chains or replicates can draw concurrently as
// long as no single stream is shared across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  // Child stream derived from (seed, stream id, key). Independent of any
  // draws already taken from this stream.
  RngStream split(std::uint64_t key) const;

  std::uint64_t next_u64();

  // U(0,1) with 53-bit resolution; never returns 0 or 1.
  double uniform();

  // Standard normal via the Marsaglia polar method.
  double normal();

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace aspr
