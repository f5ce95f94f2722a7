#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dualkit/linops.hpp"

namespace dualkit {

// Seeded generator with hand-written distributions so draws match across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  std::uint64_t below(std::uint64_t n);
  Index between(Index lo, Index hi); // inclusive

  Vector normal_vector(Index n);
  Vector uniform_vector(Index n, double lo, double hi);
  Matrix normal_matrix(Index rows, Index cols);

private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Permutation of {0..n-1} that depends only on (seed, counter).
std::vector<int> counter_permutation(int n, std::uint64_t seed, std::uint64_t counter);

} // namespace dualkit
