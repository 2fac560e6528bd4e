#pragma once

#include "vinesem/core.hpp"

namespace vinesem {

//! Bivariate copula-scale sample; every entry lies in [kEps, 1 - kEps].
class PseudoObs
{
public:
  PseudoObs() = default;

  PseudoObs(const Eigen::VectorXd& u, const Eigen::VectorXd& v)
  {
    if (u.size() != v.size())
      throw UsageError("PseudoObs: columns have different lengths");
    uv_.resize(u.size(), 2);
    uv_.col(0) = clamp_unit(u.array()).matrix();
    uv_.col(1) = clamp_unit(v.array()).matrix();
  }

  explicit PseudoObs(const Eigen::MatrixX2d& uv)
    : PseudoObs(uv.col(0), uv.col(1))
  {}

  Eigen::Index size() const { return uv_.rows(); }
  double u(Eigen::Index i) const { return uv_(i, 0); }
  double v(Eigen::Index i) const { return uv_(i, 1); }
  auto u() const { return uv_.col(0); }
  auto v() const { return uv_.col(1); }
  const Eigen::MatrixX2d& matrix() const { return uv_; }

  PseudoObs swapped() const { return PseudoObs(uv_.col(1), uv_.col(0)); }

private:
  Eigen::MatrixX2d uv_;
};

} // namespace vinesem
