#pragma once

#include "vinesem/sem.hpp"

namespace vinesem {

struct LgbnNode
{
  std::string node;
  std::vector<std::string> parents; // dag edge order
  double intercept{ 0.0 };
  Eigen::VectorXd beta;
  double sigma{ 1.0 }; // ML residual sd
  double loglik{ 0.0 };

  double edf() const { return static_cast<double>(parents.size()) + 2.0; }
};

struct LgbnModel
{
  DagSpec dag;
  std::vector<std::string> order;
  std::map<std::string, LgbnNode> nodes;
  Eigen::Index n{ 0 };

  const LgbnNode& node(const std::string& name) const;
};

//! Per-node least squares on the dag parents with ML variance.
LgbnModel
fit_lgbn(const Dataset& data, const DagSpec& dag);

//! (mean, sd) of a node given its parents; extra entries are ignored.
std::pair<double, double>
lgbn_cond_params(const LgbnModel& model, const std::string& node, const std::map<std::string, double>& parents);

double
lgbn_logdensity(const LgbnModel& model, const std::map<std::string, double>& x);

//! Implied mean and covariance over dag.nodes order.
Eigen::VectorXd
lgbn_implied_mean(const LgbnModel& model);

Eigen::MatrixXd
lgbn_implied_cov(const LgbnModel& model);

GofTable
lgbn_gof_table(const LgbnModel& model);

void
to_json(nlohmann::json& j, const LgbnModel& m);

void
from_json(const nlohmann::json& j, LgbnModel& m);

} // namespace vinesem
