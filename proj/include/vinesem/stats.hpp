#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace vinesem::stats {

//! Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
double
kendall_tau(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

//! Sample quantile, linear interpolation between order statistics (type 7).
double
quantile(Eigen::VectorXd x, double p);

double
mean(const Eigen::VectorXd& x);

//! Standard deviation with denominator n (maximum likelihood).
double
sd_ml(const Eigen::VectorXd& x);

//! One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
double
ks_statistic(const Eigen::VectorXd& x, const std::function<double(double)>& cdf);

//! Asymptotic 1% critical value of the one-sample KS statistic.
inline double
ks_critical_1pct(size_t n)
{
  return 1.6276 / std::sqrt(static_cast<double>(n));
}

//! Rank-based pseudo-observations r / (n + 1).
Eigen::VectorXd
to_pseudo_obs(const Eigen::VectorXd& x);

//! Minimize f on [lo, hi] by Brent's method; returns (argmin, min).
std::pair<double, double>
minimize_scalar(const std::function<double(double)>& f,
                double lo,
                double hi,
                double tol = 1e-8,
                int max_iter = 500);

//! Root of a monotone function on [lo, hi] (TOMS 748 with bisection safety).
double
find_root(const std::function<double(double)>& f,
          double lo,
          double hi,
          double abs_tol = 1e-12,
          int max_iter = 200);

struct NelderMeadResult
{
  Eigen::VectorXd x;
  double value;
  int iterations;
};

NelderMeadResult
nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
            Eigen::VectorXd x0,
            double step = 0.5,
            double tol = 1e-8,
            int max_iter = 500);

//! Adaptive Gauss-Kronrod integral of f on [a, b].
double
integrate(const std::function<double(double)>& f,
          double a,
          double b,
          double tol = 1e-10);

} // namespace vinesem::stats
