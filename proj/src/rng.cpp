#include "smoothnest/rng.hpp"

#include <cmath>
#include <vector>

#include "smoothnest/errors.hpp"

namespace smoothnest {

DegenerateLeverage::DegenerateLeverage(std::size_t index, double leverage)
    : NumericalError("degenerate leverage at index " + std::to_string(index) +
                     " (hat diagonal " + std::to_string(leverage) + ")"),
      index_(index),
      leverage_(leverage) {}

Rng derive_stream(std::uint64_t root_seed, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 1) + 1);
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(root_seed);
  words.push_back(static_cast<std::uint32_t>(path.size()));
  for (auto p : path) push(p);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

double uniform_open(Rng& rng) {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  // Marsaglia polar method on top of uniform_open so the draw sequence is
  // fixed by this file rather than by the standard library implementation.
  for (;;) {
    const double u = 2.0 * uniform_open(rng) - 1.0;
    const double v = 2.0 * uniform_open(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

double NormalSource::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  for (;;) {
    const double u = 2.0 * uniform_open(rng_) - 1.0;
    const double v = 2.0 * uniform_open(rng_) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      const double scale = std::sqrt(-2.0 * std::log(s) / s);
      spare_ = v * scale;
      has_spare_ = true;
      return u * scale;
    }
  }
}

}  // namespace smoothnest
