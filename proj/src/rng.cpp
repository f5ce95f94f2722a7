#include "dualkit/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace dualkit {

Rng::Rng(std::uint64_t seed) : engine_(mix_seed(seed, 0)) {}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal()
{
  double u1 = uniform();
  while (u1 <= 0.0) { u1 = uniform(); }
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n)
{
  if (n == 0) { throw Error("Rng::below: empty range"); }
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = engine_();
  while (x >= limit) { x = engine_(); }
  return x % n;
}

Index Rng::between(Index lo, Index hi) { return lo + static_cast<Index>(below(static_cast<std::uint64_t>(hi - lo + 1))); }

Vector Rng::normal_vector(Index n)
{
  Vector v(n);
  for (Index i = 0; i < n; ++i) { v[i] = normal(); }
  return v;
}

Vector Rng::uniform_vector(Index n, double lo, double hi)
{
  Vector v(n);
  for (Index i = 0; i < n; ++i) { v[i] = uniform(lo, hi); }
  return v;
}

Matrix Rng::normal_matrix(Index rows, Index cols)
{
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) { m(i, j) = normal(); }
  }
  return m;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
  // splitmix64 finalizer over the (seed, stream) pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<int> counter_permutation(int n, std::uint64_t seed, std::uint64_t counter)
{
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(mix_seed(seed, counter + 1));
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

} // namespace dualkit
