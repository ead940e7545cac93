#include "ri2d/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ri2d {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;  // sqrt(3)-1

inline void philox_round(std::array<std::uint32_t, 4>& c,
                         const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * c[0];
  const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * c[2];
  const std::uint32_t h0 = std::uint32_t(p0 >> 32), l0 = std::uint32_t(p0);
  const std::uint32_t h1 = std::uint32_t(p1 >> 32), l1 = std::uint32_t(p1);
  c = {h1 ^ c[1] ^ k[0], l1, h0 ^ c[3] ^ k[1], l0};
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  key_ = {std::uint32_t(seed), std::uint32_t(seed >> 32)};
}

void Rng::refill() {
  std::array<std::uint32_t, 4> c = {
      std::uint32_t(counter_), std::uint32_t(counter_ >> 32),
      std::uint32_t(stream_), std::uint32_t(stream_ >> 32)};
  std::array<std::uint32_t, 2> k = key_;
  for (int r = 0; r < 10; ++r) {
    philox_round(c, k);
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  buf_ = c;
  bufpos_ = 0;
  ++counter_;
}

std::uint32_t Rng::next_u32() {
  if (bufpos_ >= 4) refill();
  return buf_[bufpos_++];
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double Rng::u01() {
  return double(next_u64() >> 11) * 0x1.0p-53;  // [0,1), 53 bits
}

std::uint32_t Rng::below(std::uint32_t n) {
  if (n == 0) throw std::invalid_argument("below(0)");
  if ((n & (n - 1)) == 0) return next_u32() & (n - 1);
  const std::uint32_t lim = 0xFFFFFFFFu - 0xFFFFFFFFu % n;
  for (;;) {
    const std::uint32_t v = next_u32();
    if (v < lim) return v % n;
  }
}

double Rng::exponential() {
  return -std::log1p(-u01());  // u01() < 1, so the result is finite
}

double Rng::normal() {
  for (;;) {
    const double u = 2.0 * u01() - 1.0;
    const double v = 2.0 * u01() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson mean < 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double threshold = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = u01();
    while (prod > threshold) {
      ++k;
      prod *= u01();
    }
    return k;
  }
  return poisson(mean * 0.5) + poisson(mean * 0.5);
}

Rng Rng::child(std::uint64_t index) const {
  return Rng(seed_, splitmix64(stream_ * 0x100000001b3ull + index));
}

AliasTable::AliasTable(const std::vector<double>& weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("alias table needs weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("alias weight < 0");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("alias weights sum to 0");
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * double(n) / total;
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i)
    (scaled[i] < 1.0 ? small : large).push_back(std::uint32_t(i));
  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back(), l = large.back();
    small.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::uint32_t i : large) prob_[i] = 1.0;
  for (std::uint32_t i : small) prob_[i] = 1.0;  // numerical leftovers
}

std::size_t AliasTable::sample(Rng& rng) const {
  const std::size_t i = rng.below(std::uint32_t(prob_.size()));
  return rng.u01() < prob_[i] ? i : alias_[i];
}

}  // namespace ri2d
