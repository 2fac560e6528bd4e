#pragma once

#include "vinesem/pseudo_obs.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace vinesem {

class NpCopula;

enum class Family
{
  independence,
  gaussian,
  clayton,
  gumbel,
  frank,
  joe,
  bb8,
  nonparametric
};

//! Which margin the h-function conditions on.
//!
//! `given_second` is dC(u, v)/dv, the conditional CDF of U at u given V = v;
//! `given_first` is dC(u, v)/du, the conditional CDF of V at v given U = u.
enum class HDir
{
  given_first,
  given_second
};

enum class SelectionCriterion
{
  aic,
  bic,
  loglik
};

std::string
to_string(Family f);

Family
family_from_string(const std::string& name);

SelectionCriterion
criterion_from_string(const std::string& name);

std::string
to_string(SelectionCriterion c);

//! Number of parameters of a parametric family.
int
param_count(Family f);

//! Rotations that make sense for the family (0 only for radially symmetric
//! families with full-range dependence).
std::vector<int>
admissible_rotations(Family f);

//! A fitted (or user-specified) bivariate copula.
struct PairCopula
{
  Family family{ Family::independence };
  int rotation{ 0 };
  Eigen::VectorXd params;
  double edf{ 0.0 };
  double loglik{ 0.0 };
  std::shared_ptr<const NpCopula> np;

  PairCopula() = default;
  PairCopula(Family f, int rot, Eigen::VectorXd par);

  bool is_independence() const { return family == Family::independence; }
  double aic() const { return -2.0 * loglik + 2.0 * edf; }
  double bic(Eigen::Index n) const
  {
    return -2.0 * loglik + std::log(static_cast<double>(n)) * edf;
  }
};

//! Throws DomainError when the parameters or rotation are not admissible.
void
validate(const PairCopula& spec);

double
copula_pdf(const PairCopula& spec, double u, double v);

double
copula_log_pdf(const PairCopula& spec, double u, double v);

double
copula_cdf(const PairCopula& spec, double u, double v);

double
hfunc(const PairCopula& spec, HDir dir, double u, double v);

//! Inverse of hfunc in its free argument.
//!
//! For `given_second` returns u with hfunc(spec, given_second, u, cond) = p;
//! for `given_first` returns v with hfunc(spec, given_first, cond, v) = p.
double
hinv(const PairCopula& spec, HDir dir, double p, double cond);

Eigen::VectorXd
copula_log_pdf(const PairCopula& spec, const PseudoObs& data);

Eigen::VectorXd
hfunc(const PairCopula& spec, HDir dir, const PseudoObs& data);

double
copula_loglik(const PairCopula& spec, const PseudoObs& data);

double
kendall_tau(const PairCopula& spec);

Eigen::VectorXd
param_from_tau(Family family, int rotation, double tau);

//! Maximum likelihood fit of one parametric family at a fixed rotation.
PairCopula
fit_pair_mle(const PseudoObs& data, Family family, int rotation);

//! Best candidate by criterion; independence is always a candidate.
PairCopula
select_pair_family(const PseudoObs& data,
                   const std::vector<Family>& candidates,
                   SelectionCriterion criterion = SelectionCriterion::aic);

//! Family sets used by the model configurations.
std::vector<Family>
family_set(const std::string& name);

void
to_json(nlohmann::json& j, const PairCopula& spec);

void
from_json(const nlohmann::json& j, PairCopula& spec);

} // namespace vinesem
