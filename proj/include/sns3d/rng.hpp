#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>

namespace sns3d {

// Deterministic random stream. mt19937_64 is bit-exact across platforms and
// the uniform/Gaussian conversions are spelled out here, so a (seed, member)
// pair pins the whole draw sequence. Gaussians come from Box-Muller pairs
// with no cached spare: serialization of the engine captures the full state.
class RngStream {
 public:
  RngStream() : engine_(0) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // independent stream for one ensemble member
  static RngStream for_member(std::uint64_t seed, std::uint64_t member);

  double uniform01();                       // [0,1)
  double gaussian();                        // N(0,1)
  std::complex<double> complex_gaussian();  // E|z|^2 = 1

  std::string serialize() const;
  static RngStream deserialize(const std::string& blob);

  bool operator==(const RngStream&) const = default;

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace sns3d
