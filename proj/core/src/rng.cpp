#include "vrlm/rng.hpp"

#include <cmath>
#include <numbers>

#include "vrlm/errors.hpp"

namespace vrlm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

}  // namespace

std::uint64_t RngStream::next_u64() {
  return mix3(seed_, agent_, counter_++);
}

double RngStream::next_double() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  if (n == 0) throw numeric_error("next_below: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

double RngStream::next_gaussian() {
  double u1;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<long> RngStream::sample_without_replacement(long n, long k) {
  if (k > n) throw numeric_error("sample_without_replacement: k > n");
  std::vector<long> pool(n);
  for (long i = 0; i < n; ++i) pool[i] = i;
  std::vector<long> out(k);
  for (long i = 0; i < k; ++i) {
    const long j = i + static_cast<long>(next_below(n - i));
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  return out;
}

std::vector<long> RngStream::sample_with_replacement(long n, long k) {
  std::vector<long> out(k);
  for (long i = 0; i < k; ++i) out[i] = static_cast<long>(next_below(n));
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t sweep_index,
                          std::uint64_t repetition) {
  return mix3(master, 0x5eedULL + sweep_index, 0xa11c0ULL + repetition);
}

}  // namespace vrlm
