#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace qbot {

/// Seeded random stream with platform-independent draw functions.
///
/// The engine (std::mt19937_64) is fully specified by the C++ standard, and
/// every transform below is written out explicitly instead of going through
/// the implementation-defined std distributions, so the same seed produces
/// the same draw sequence on every platform.
///
/// Substreams are derived from (seed, name); adding a new named substream
/// never perturbs the draws of existing ones.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::string name = "root");

  /// Derive an independent child stream. Deterministic in (this->seed, name).
  RandomStream substream(std::string_view name) const;

  /// Uniform double in [0, 1), 53 bits of precision.
  double uniform();

  /// True with probability p. Exact at the endpoints: p <= 0 is never true,
  /// p >= 1 is always true.
  bool bernoulli(double p);

  /// Uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t uniform_u64(std::uint64_t bound);

  /// Gaussian via Box-Muller; consumes two uniform draws per call.
  double gaussian(double mean, double sigma);

  /// Exponential inter-arrival time with the given rate (events per unit).
  double exponential(double rate);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }
  const std::string& name() const { return name_; }

 private:
  std::uint64_t next_u64();

  std::uint64_t seed_;
  std::string name_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

/// 64-bit FNV-1a, used for substream derivation and log digests.
std::uint64_t fnv1a64(std::string_view data);

/// Draw accounting for one named substream, recorded in run reports so every
/// random draw in a run is attributable.
struct StreamUsage {
  std::string name;
  std::uint64_t seed = 0;
  std::uint64_t draws = 0;
};

inline StreamUsage usage_of(const RandomStream& stream) {
  return StreamUsage{stream.name(), stream.seed(), stream.draws()};
}

}  // namespace qbot
