#pragma once

#include "vinesem/core.hpp"

#include <cstdint>
#include <random>

namespace vinesem {

inline uint64_t
splitmix64(uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! mt19937_64 wrapper; `stream` gives independent per-node generators from one seed.
class Rng
{
public:
  explicit Rng(uint64_t seed, uint64_t stream = 0)
    : eng_(splitmix64(seed ^ splitmix64(stream + 1)))
  {}

  //! Uniform on the open interval (0, 1) from the top 53 bits.
  double uniform()
  {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform()); }

  Eigen::VectorXd uniform(Eigen::Index n)
  {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i)
      out(i) = uniform();
    return out;
  }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
};

} // namespace vinesem
