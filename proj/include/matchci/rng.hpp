#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "matchci/errors.hpp"

namespace matchci {

// Philox4x32-10 counter-based block function. Stateless: output depends only
// on (counter, key), which is what makes replicate streams independent of the
// thread that happens to run them.
struct Philox4x32 {
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block block(Block ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Deterministic child seed for nested runs (e.g. the bootstrap inside one
// coverage replication), so nested streams never collide with parent ones.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag ^ 0xA5A5A5A5DEADBEEFull));
}

double inverse_normal_cdf(double p);  // normal.hpp; used by RngStream::normal

// One independent random stream identified by (seed, stream). Stream ids are
// replicate / replication indices; results are identical for any thread count.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1); rejects exact zeros.
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double normal() { return inverse_normal_cdf(uniform_pos()); }

  double exponential(double rate = 1.0) {
    return -std::log1p(-uniform()) / rate;
  }

  // Uniform integer in [0, n), rejection sampled (no modulo bias).
  std::int64_t uniform_int(std::int64_t n) {
    if (n <= 0) throw PreconditionError("uniform_int: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t bound = (std::numeric_limits<std::uint64_t>::max() / un) * un;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= bound);
    return static_cast<std::int64_t>(r % un);
  }

  // Exact Binomial(n, p) draw. Inverse-CDF walk on chunks kept small enough
  // that the pmf at zero cannot underflow; no normal approximation.
  std::int64_t binomial(std::int64_t n, double p) {
    if (n < 0 || p < 0.0 || p > 1.0 || !std::isfinite(p))
      throw PreconditionError("binomial: need n >= 0 and p in [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    std::int64_t total = 0;
    while (n > 0) {
      std::int64_t chunk = n;
      if (static_cast<double>(n) * std::min(p, 1.0 - p) > 25.0)
        chunk = std::max<std::int64_t>(1, static_cast<std::int64_t>(25.0 / std::min(p, 1.0 - p)));
      total += binomial_walk(chunk, p);
      n -= chunk;
    }
    return total;
  }

 private:
  void refill() {
    const Philox4x32::Block ctr = {static_cast<std::uint32_t>(block_),
                                   static_cast<std::uint32_t>(block_ >> 32),
                                   stream_lo_, stream_hi_};
    buf_ = Philox4x32::block(ctr, key_);
    ++block_;
    pos_ = 0;
  }

  std::int64_t binomial_walk(std::int64_t n, double p) {
    if (p > 0.5) return n - binomial_walk(n, 1.0 - p);
    const double odds = p / (1.0 - p);
    double pmf = std::exp(static_cast<double>(n) * std::log1p(-p));
    double cum = pmf;
    const double u = uniform();
    std::int64_t k = 0;
    while (u > cum && k < n) {
      pmf *= odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
      cum += pmf;
      ++k;
    }
    return k;
  }

  Philox4x32::Key key_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t block_ = 0;
  Philox4x32::Block buf_{};
  int pos_ = 4;
};

}  // namespace matchci
