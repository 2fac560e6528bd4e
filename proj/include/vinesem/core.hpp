#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/erf.hpp>

namespace vinesem {

//! Lower clamping bound for every probability entering a copula routine.
inline constexpr double kEps = 1e-10;

// error taxonomy; the CLI maps usage/domain errors to exit 2, numeric to 1
struct UsageError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error
{
  using std::domain_error::domain_error;
};

struct UnsupportedError : std::logic_error
{
  using std::logic_error::logic_error;
};

struct DegenerateDataError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct CycleError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

template<std::floating_point Scalar>
inline Scalar
clamp_unit(Scalar u)
{
  return std::clamp<Scalar>(u, Scalar(kEps), Scalar(1) - Scalar(kEps));
}

template<typename Derived>
inline auto
clamp_unit(const Eigen::ArrayBase<Derived>& u)
{
  using Scalar = typename Derived::Scalar;
  return u.max(Scalar(kEps)).min(Scalar(1) - Scalar(kEps));
}

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

template<std::floating_point Scalar>
inline Scalar
normal_pdf(Scalar x)
{
  return Scalar(kInvSqrt2Pi) * std::exp(-Scalar(0.5) * x * x);
}

template<std::floating_point Scalar>
inline Scalar
normal_logpdf(Scalar x)
{
  return -Scalar(kLogSqrt2Pi) - Scalar(0.5) * x * x;
}

template<std::floating_point Scalar>
inline Scalar
normal_cdf(Scalar x)
{
  return Scalar(0.5) * std::erfc(-x / std::sqrt(Scalar(2)));
}

template<std::floating_point Scalar>
inline Scalar
normal_quantile(Scalar p)
{
  p = std::clamp<Scalar>(p, std::numeric_limits<Scalar>::min(), Scalar(1));
  if (p >= Scalar(1))
    return std::numeric_limits<Scalar>::infinity();
  return -std::sqrt(Scalar(2)) * boost::math::erfc_inv(Scalar(2) * p);
}

template<typename Derived>
inline Eigen::ArrayXd
normal_quantile(const Eigen::ArrayBase<Derived>& p)
{
  return p.derived().unaryExpr([](double x) { return normal_quantile(x); });
}

//! Standard bivariate normal CDF P(Z1 <= h, Z2 <= k) with correlation rho.
double
bivariate_normal_cdf(double h, double k, double rho);

} // namespace vinesem
