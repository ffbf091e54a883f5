#include <qbot/random.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qbot {

namespace {

// splitmix64 finalizer; decorrelates derived seeds from the master seed.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

RandomStream::RandomStream(std::uint64_t seed, std::string name)
    : seed_(seed), name_(std::move(name)), engine_(seed) {}

RandomStream RandomStream::substream(std::string_view name) const {
  const std::uint64_t child = mix64(seed_ ^ mix64(fnv1a64(name)));
  std::string child_name = name_ + "/" + std::string(name);
  return RandomStream(child, std::move(child_name));
}

std::uint64_t RandomStream::next_u64() {
  ++draws_;
  return engine_();
}

double RandomStream::uniform() {
  // Top 53 bits give a uniform dyadic rational in [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool RandomStream::bernoulli(double p) { return uniform() < p; }

std::uint64_t RandomStream::uniform_u64(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_u64: bound must be nonzero");
  // Modulo bias is below bound / 2^64, immaterial at simulation scales.
  return next_u64() % bound;
}

double RandomStream::gaussian(double mean, double sigma) {
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::exponential(double rate) {
  if (rate <= 0.0) throw std::invalid_argument("exponential: rate must be positive");
  return -std::log1p(-uniform()) / rate;
}

}  // namespace qbot
