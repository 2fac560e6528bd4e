#pragma once

#include "vinesem/core.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace vinesem {

enum class MarginKind
{
  gaussian,
  mixture,
  kde
};

std::string
to_string(MarginKind k);

MarginKind
margin_kind_from_string(const std::string& name);

struct MarginOptions
{
  int kmax = 5;
  int restarts = 10;
  double tol = 1e-8;
  int max_iter = 500;
  uint64_t seed = 20240501;
};

struct MixtureComponent
{
  double weight;
  double mean;
  double sd;
};

struct MarginGof
{
  double loglik;
  double aic;
  double bic;
  double edf;
};

//! Fitted univariate distribution. Immutable once built by fit_margin.
class MarginModel
{
public:
  MarginModel() = default;

  MarginKind kind() const { return kind_; }

  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  //! cdf clamped to [kEps, 1 - kEps]
  double pit(double x) const;
  double pit_inv(double u) const;

  Eigen::VectorXd pit(const Eigen::VectorXd& x) const;

  double loglik() const { return loglik_; }
  double edf() const { return edf_; }
  Eigen::Index n() const { return n_; }
  bool converged() const { return converged_; }

  // gaussian (a one-component mixture)
  double mean() const;
  double sd() const;

  const std::vector<MixtureComponent>& components() const { return comps_; }

  // kde
  const Eigen::VectorXd& sample() const { return sample_; }
  double bandwidth() const { return bandwidth_; }
  //! Always "none": the kernel is not reflected at any boundary.
  const std::string& boundary() const { return boundary_; }

  //! BIC of each tried mixture order k = 1..kmax (mixture only).
  const std::vector<double>& bic_trace() const { return bic_trace_; }

  friend MarginModel fit_margin(const Eigen::VectorXd& x, MarginKind kind, const MarginOptions& opt);
  friend MarginModel make_gaussian_margin(double mean, double sd);
  friend void from_json(const nlohmann::json& j, MarginModel& m);

private:
  MarginKind kind_{ MarginKind::gaussian };
  std::vector<MixtureComponent> comps_;
  Eigen::VectorXd sample_;
  double bandwidth_{ 0.0 };
  std::string boundary_{ "none" };
  double loglik_{ 0.0 };
  double edf_{ 0.0 };
  Eigen::Index n_{ 0 };
  bool converged_{ true };
  std::vector<double> bic_trace_;
};

MarginModel
fit_margin(const Eigen::VectorXd& x, MarginKind kind, const MarginOptions& opt = {});

MarginModel
make_gaussian_margin(double mean, double sd);

//! Log-likelihood (leave-one-out for kde) and information criteria on x.
MarginGof
margin_gof(const MarginModel& model, const Eigen::VectorXd& x);

void
to_json(nlohmann::json& j, const MarginModel& m);

void
from_json(const nlohmann::json& j, MarginModel& m);

} // namespace vinesem
