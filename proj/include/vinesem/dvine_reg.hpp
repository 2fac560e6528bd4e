#pragma once

#include "vinesem/copula.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace vinesem {

enum class VineCriterion
{
  cll,
  caic,
  cbic
};

std::string
to_string(VineCriterion c);

VineCriterion
vine_criterion_from_string(const std::string& name);

//! Candidate pair-copula families and the rule that picks among them.
struct CopulaConfig
{
  std::vector<Family> families{ Family::gaussian };
  SelectionCriterion pair_criterion{ SelectionCriterion::aic };
};

struct SelectionStep
{
  std::string covariate;
  double criterion;
  double cll;
  double edf;
};

using NamedColumns = std::vector<std::pair<std::string, Eigen::VectorXd>>;
using UnitValues = std::map<std::string, double>;

//! D-vine regression: the response heads the path and selected covariates follow
//! in selection order. Pair (t, a) joins path positions a and a + t + 1 given the
//! positions between them; row a = 0 holds the response copulas.
class DVineRegModel
{
public:
  DVineRegModel() = default;
  DVineRegModel(std::string response,
                std::vector<std::string> order,
                std::vector<std::vector<PairCopula>> pairs,
                VineCriterion criterion);

  const std::string& response() const { return response_; }
  const std::vector<std::string>& order() const { return order_; }
  size_t size() const { return order_.size(); }
  //! pairs()[t][a], t = 0..m-1, a = 0..m-1-t
  const std::vector<std::vector<PairCopula>>& pairs() const { return pairs_; }
  VineCriterion criterion() const { return criterion_; }
  const std::vector<SelectionStep>& trace() const { return trace_; }
  //! Criterion value and edf of the response row at fit time.
  double fit_cll() const { return fit_cll_; }
  double edf() const;

  double cond_cdf(double y_u, const UnitValues& x_u) const;
  double cond_quantile(double alpha, const UnitValues& x_u) const;
  double cond_pdf(double y_u, const UnitValues& x_u, double margin_density_at_y) const;
  //! Log of the response-row copula product at one point.
  double cond_log_copula(double y_u, const UnitValues& x_u) const;

  friend DVineRegModel fit_dvine_reg(const Eigen::VectorXd& resp_u,
                                     const NamedColumns& cand_u,
                                     VineCriterion criterion,
                                     const CopulaConfig& config,
                                     const std::string& response);
  friend void from_json(const nlohmann::json& j, DVineRegModel& m);

private:
  std::vector<double> ordered(const UnitValues& x_u) const;
  //! F(x_{t+1} | x_1..x_t) for t = 0..m-1
  std::vector<double> conditioners(const std::vector<double>& xs) const;

  std::string response_;
  std::vector<std::string> order_;
  std::vector<std::vector<PairCopula>> pairs_;
  VineCriterion criterion_{ VineCriterion::caic };
  std::vector<SelectionStep> trace_;
  double fit_cll_{ 0.0 };
};

//! Greedy forward selection over the candidate columns (ties go to the earlier candidate).
DVineRegModel
fit_dvine_reg(const Eigen::VectorXd& resp_u,
              const NamedColumns& cand_u,
              VineCriterion criterion = VineCriterion::caic,
              const CopulaConfig& config = {},
              const std::string& response = "y");

//! Conditional log-likelihood of the response row on data; nonparametric pairs
//! are evaluated in-sample on their tabulated density.
double
cll(const DVineRegModel& model, const Eigen::VectorXd& resp_u, const NamedColumns& x_u);

double
caic(const DVineRegModel& model, const Eigen::VectorXd& resp_u, const NamedColumns& x_u);

double
cbic(const DVineRegModel& model, const Eigen::VectorXd& resp_u, const NamedColumns& x_u);

void
to_json(nlohmann::json& j, const DVineRegModel& m);

void
from_json(const nlohmann::json& j, DVineRegModel& m);

} // namespace vinesem
