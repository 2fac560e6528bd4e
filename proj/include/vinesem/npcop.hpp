#pragma once

#include "vinesem/copula.hpp"

namespace vinesem {

//! Transformation kernel estimator of a bivariate copula density.
//!
//! The sample is mapped to the normal scale, a Gaussian product kernel with a
//! normal-reference bandwidth matrix estimates the density there, and the
//! result is mapped back by dividing out the standard normal margins. The
//! density is tabulated on a uniform grid of cell centres in (0, 1)^2 and
//! rescaled until both conditional densities integrate to one, so that
//! h-functions are exact cumulative sums of the table.
class NpCopula
{
public:
  static constexpr int kGrid = 201;
  static constexpr int kMinSample = 30;

  NpCopula() = default;

  //! Rebuilds an estimator from a serialized table.
  NpCopula(Eigen::MatrixXd density_grid, Eigen::Matrix2d bandwidth, double edf, double loglik);

  double pdf(double u, double v) const;
  double hfunc(HDir dir, double u, double v) const;
  double hinv(HDir dir, double p, double cond) const;
  double kendall_tau() const;

  double edf() const { return edf_; }
  double loglik() const { return loglik_; }
  const Eigen::Matrix2d& bandwidth() const { return bandwidth_; }
  //! Normalized density at cell centres; rows index u, columns index v.
  const Eigen::MatrixXd& grid() const { return grid_; }
  //! Normal-scale sample used at fit time (empty after deserialization).
  const Eigen::MatrixX2d& z_sample() const { return z_; }

  friend NpCopula fit_np_pair(const PseudoObs& data);

private:
  void build_cumulatives();

  Eigen::MatrixX2d z_;
  Eigen::Matrix2d bandwidth_{ Eigen::Matrix2d::Identity() };
  Eigen::MatrixXd grid_;
  // cum_u_(j, l): integral over u in [0, j / kGrid] at v-centre l
  Eigen::MatrixXd cum_u_;
  // cum_v_(j, k): integral over v in [0, j / kGrid] at u-centre k
  Eigen::MatrixXd cum_v_;
  double edf_{ 0.0 };
  double loglik_{ 0.0 };
};

NpCopula
fit_np_pair(const PseudoObs& data);

//! Raw (unnormalized) transformation estimate at one point; exposed for tests.
double
np_raw_density(const Eigen::MatrixX2d& z, const Eigen::Matrix2d& bandwidth, double u, double v);

void
to_json(nlohmann::json& j, const NpCopula& cop);

NpCopula
np_from_json(const nlohmann::json& j);

} // namespace vinesem
