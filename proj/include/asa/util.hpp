#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace asa {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void msg_into(std::ostringstream&) {}
template <typename A, typename... Rest>
void msg_into(std::ostringstream& os, const A& a, const Rest&... rest) {
  os << a;
  msg_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string msg(const Args&... args) {
  std::ostringstream os;
  detail::msg_into(os, args...);
  return os.str();
}

template <typename... Args>
void require(bool cond, const Args&... args) {
  if (!cond) throw Error(msg(args...));
}

inline constexpr double kPi = 3.14159265358979323846;

// Random helpers built on mt19937_64 raw output only, so streams are
// reproducible run-to-run independent of the standard library's
// distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline double gaussian(std::mt19937_64& rng) {
  double u1 = (double(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

inline uint64_t hash_combine(uint64_t seed, uint64_t value) {
  // splitmix64 round over seed ^ value mix
  uint64_t x = seed + 0x9e3779b97f4a7c15ULL + value;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace asa
