#include "sns3d/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace sns3d {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream RngStream::for_member(std::uint64_t seed, std::uint64_t member) {
  // two splitmix rounds decorrelate adjacent member indices
  return RngStream(splitmix64(splitmix64(seed) ^ (member + 1)));
}

double RngStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian() {
  const double u1 = 1.0 - uniform01();  // (0,1], keeps log finite
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::complex<double> RngStream::complex_gaussian() {
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-std::log(u1));
  const double phase = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phase), r * std::sin(phase)};
}

std::string RngStream::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

RngStream RngStream::deserialize(const std::string& blob) {
  RngStream s;
  std::istringstream is(blob);
  is >> s.engine_;
  if (is.fail()) throw std::invalid_argument("rng state blob is malformed");
  return s;
}

}  // namespace sns3d
