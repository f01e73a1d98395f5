#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace smoothnest {

using Rng = std::mt19937_64;

/// Independent stream derived from a root seed and a task path such as
/// {budget, m, replication}. Same inputs give the same stream on every run,
/// independent of how tasks are scheduled.
Rng derive_stream(std::uint64_t root_seed, std::initializer_list<std::uint64_t> path);

/// Uniform on the open interval (0, 1).
double uniform_open(Rng& rng);

double standard_normal(Rng& rng);

/// Normal draws in pairs from the polar method; keeps the spare value.
/// Used in the path simulators where draw throughput matters.
class NormalSource {
 public:
  explicit NormalSource(Rng& rng) : rng_(rng) {}

  double operator()();

 private:
  Rng& rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace smoothnest
