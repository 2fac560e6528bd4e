#include "vinesem/copula.hpp"
#include "vinesem/npcop.hpp"
#include "vinesem/stats.hpp"

#include <array>

namespace vinesem {

namespace {

constexpr double kFrankIndepThreshold = 1e-5;
constexpr double kGaussianBound = 0.9999;

struct Bounds
{
  double lo;
  double hi;
};

Bounds
param_bounds(Family f)
{
  switch (f) {
    case Family::gaussian:
      return { -kGaussianBound, kGaussianBound };
    case Family::clayton:
      return { 1e-6, 28.0 };
    case Family::gumbel:
    case Family::joe:
      return { 1.0, 50.0 };
    case Family::frank:
      return { -35.0, 35.0 };
    case Family::bb8:
      return { 1.0, 8.0 };
    default:
      return { 0.0, 0.0 };
  }
}

// log(exp(a) + exp(b) - exp(c)) for a, b >= c
double
log_sum_minus(double a, double b, double c)
{
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m) - std::exp(c - m));
}

// ---------------------------------------------------------------------------
// unrotated families; h0(u, v) = dC(u, v)/dv, all are exchangeable

double
gaussian_log_pdf(double rho, double u, double v)
{
  double x = normal_quantile(u), y = normal_quantile(v);
  double r2 = 1.0 - rho * rho;
  return -0.5 * std::log(r2) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2);
}

double
gaussian_h(double rho, double u, double v)
{
  double x = normal_quantile(u), y = normal_quantile(v);
  return normal_cdf((x - rho * y) / std::sqrt(1.0 - rho * rho));
}

double
gaussian_hinv(double rho, double p, double v)
{
  double y = normal_quantile(v);
  return normal_cdf(std::sqrt(1.0 - rho * rho) * normal_quantile(p) + rho * y);
}

double
clayton_log_pdf(double th, double u, double v)
{
  double lu = std::log(u), lv = std::log(v);
  double L = log_sum_minus(-th * lu, -th * lv, 0.0);
  return std::log1p(th) + (-1.0 - th) * (lu + lv) + (-1.0 / th - 2.0) * L;
}

double
clayton_cdf(double th, double u, double v)
{
  double L = log_sum_minus(-th * std::log(u), -th * std::log(v), 0.0);
  return std::exp(-L / th);
}

double
clayton_h(double th, double u, double v)
{
  double lv = std::log(v);
  double L = log_sum_minus(-th * std::log(u), -th * lv, 0.0);
  return std::exp((-th - 1.0) * lv + (-1.0 / th - 1.0) * L);
}

double
clayton_hinv(double th, double p, double v)
{
  double s = 1.0 + std::pow(v, -th) * std::expm1(-th / (1.0 + th) * std::log(p));
  return std::exp(-std::log(s) / th);
}

double
log_gumbel_A(double th, double x, double y)
{
  double lx = std::log(x), ly = std::log(y);
  double m = std::max(lx, ly), s = std::min(lx, ly);
  return th * m + std::log1p(std::exp(th * (s - m)));
}

double
gumbel_log_pdf(double th, double u, double v)
{
  double x = -std::log(u), y = -std::log(v);
  double logA = log_gumbel_A(th, x, y);
  double a = std::exp(logA / th);
  return -a - std::log(u) - std::log(v) + (th - 1.0) * (std::log(x) + std::log(y)) +
         (-2.0 + 1.0 / th) * logA + std::log(a + th - 1.0);
}

double
gumbel_cdf(double th, double u, double v)
{
  double x = -std::log(u), y = -std::log(v);
  return std::exp(-std::exp(log_gumbel_A(th, x, y) / th));
}

double
gumbel_h(double th, double u, double v)
{
  double x = -std::log(u), y = -std::log(v);
  double logA = log_gumbel_A(th, x, y);
  double a = std::exp(logA / th);
  return std::exp(-a + (1.0 / th - 1.0) * logA + (th - 1.0) * std::log(y) - std::log(v));
}

double
frank_log_pdf(double th, double u, double v)
{
  if (std::abs(th) < kFrankIndepThreshold)
    return 0.0;
  double e1 = -std::expm1(-th);
  double den = e1 - std::expm1(-th * u) * std::expm1(-th * v);
  return std::log(th * e1) - th * (u + v) - 2.0 * std::log(std::abs(den));
}

double
frank_cdf(double th, double u, double v)
{
  if (std::abs(th) < kFrankIndepThreshold)
    return u * v;
  return -std::log1p(std::expm1(-th * u) * std::expm1(-th * v) / std::expm1(-th)) / th;
}

double
frank_h(double th, double u, double v)
{
  if (std::abs(th) < kFrankIndepThreshold)
    return u;
  double a = std::expm1(-th * u), b = std::expm1(-th * v), d = std::expm1(-th);
  return std::exp(-th * v) * a / (d + a * b);
}

double
frank_hinv(double th, double p, double v)
{
  if (std::abs(th) < kFrankIndepThreshold)
    return p;
  double b = std::expm1(-th * v), d = std::expm1(-th);
  double a = p * d / (1.0 + b * (1.0 - p));
  return -std::log1p(a) / th;
}

double
joe_log_pdf(double th, double u, double v)
{
  double lub = std::log1p(-u), lvb = std::log1p(-v);
  double ut = std::exp(th * lub), vt = std::exp(th * lvb);
  double S = ut + vt - ut * vt;
  return (1.0 / th - 2.0) * std::log(S) + (th - 1.0) * (lub + lvb) + std::log(th - 1.0 + S);
}

double
joe_cdf(double th, double u, double v)
{
  double ut = std::pow(1.0 - u, th), vt = std::pow(1.0 - v, th);
  return 1.0 - std::pow(ut + vt - ut * vt, 1.0 / th);
}

double
joe_h(double th, double u, double v)
{
  double lvb = std::log1p(-v);
  double ut = std::pow(1.0 - u, th), vt = std::exp(th * lvb);
  double S = ut + vt - ut * vt;
  return std::exp((1.0 / th - 1.0) * std::log(S) + (th - 1.0) * lvb) * (1.0 - ut);
}

struct Bb8Terms
{
  double eta, x, y, w;
};

Bb8Terms
bb8_terms(double th, double de, double u, double v)
{
  double eta = -std::expm1(th * std::log1p(-de));
  double x = -std::expm1(th * std::log1p(-de * u));
  double y = -std::expm1(th * std::log1p(-de * v));
  return { eta, x, y, x * y / eta };
}

double
bb8_log_pdf(double th, double de, double u, double v)
{
  auto t = bb8_terms(th, de, u, v);
  return std::log(de) + (th - 1.0) * (std::log1p(-de * u) + std::log1p(-de * v)) +
         (1.0 / th - 2.0) * std::log1p(-t.w) + std::log(th - t.w) - std::log(t.eta);
}

double
bb8_cdf(double th, double de, double u, double v)
{
  auto t = bb8_terms(th, de, u, v);
  return -std::expm1(std::log1p(-t.w) / th) / de;
}

double
bb8_h(double th, double de, double u, double v)
{
  auto t = bb8_terms(th, de, u, v);
  return std::exp((1.0 / th - 1.0) * std::log1p(-t.w) + (th - 1.0) * std::log1p(-de * v)) * t.x /
         t.eta;
}

// ---------------------------------------------------------------------------

double
base_log_pdf(const PairCopula& s, double u, double v)
{
  const auto& p = s.params;
  switch (s.family) {
    case Family::independence:
      return 0.0;
    case Family::gaussian:
      return gaussian_log_pdf(p(0), u, v);
    case Family::clayton:
      return clayton_log_pdf(p(0), u, v);
    case Family::gumbel:
      return gumbel_log_pdf(p(0), u, v);
    case Family::frank:
      return frank_log_pdf(p(0), u, v);
    case Family::joe:
      return joe_log_pdf(p(0), u, v);
    case Family::bb8:
      return bb8_log_pdf(p(0), p(1), u, v);
    case Family::nonparametric:
      return std::log(s.np->pdf(u, v));
  }
  return 0.0;
}

double
base_cdf(const PairCopula& s, double u, double v)
{
  const auto& p = s.params;
  switch (s.family) {
    case Family::independence:
      return u * v;
    case Family::gaussian:
      return bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), p(0));
    case Family::clayton:
      return clayton_cdf(p(0), u, v);
    case Family::gumbel:
      return gumbel_cdf(p(0), u, v);
    case Family::frank:
      return frank_cdf(p(0), u, v);
    case Family::joe:
      return joe_cdf(p(0), u, v);
    case Family::bb8:
      return bb8_cdf(p(0), p(1), u, v);
    case Family::nonparametric:
      throw UnsupportedError("copula_cdf: not available for nonparametric pairs");
  }
  return 0.0;
}

double
base_h(const PairCopula& s, double u, double v)
{
  const auto& p = s.params;
  switch (s.family) {
    case Family::independence:
      return u;
    case Family::gaussian:
      return gaussian_h(p(0), u, v);
    case Family::clayton:
      return clayton_h(p(0), u, v);
    case Family::gumbel:
      return gumbel_h(p(0), u, v);
    case Family::frank:
      return frank_h(p(0), u, v);
    case Family::joe:
      return joe_h(p(0), u, v);
    case Family::bb8:
      return bb8_h(p(0), p(1), u, v);
    case Family::nonparametric:
      return s.np->hfunc(HDir::given_second, u, v);
  }
  return u;
}

double
base_hinv(const PairCopula& s, double p, double v)
{
  const auto& par = s.params;
  switch (s.family) {
    case Family::independence:
      return p;
    case Family::gaussian:
      return gaussian_hinv(par(0), p, v);
    case Family::clayton:
      return clayton_hinv(par(0), p, v);
    case Family::frank:
      return frank_hinv(par(0), p, v);
    case Family::nonparametric:
      return s.np->hinv(HDir::given_second, p, v);
    default:
      break;
  }
  auto f = [&](double u) { return base_h(s, u, v) - p; };
  return stats::find_root(f, kEps, 1.0 - kEps, 1e-14, 200);
}

PairCopula
swapped(const PairCopula& s)
{
  PairCopula t = s;
  if (s.rotation == 90)
    t.rotation = 270;
  else if (s.rotation == 270)
    t.rotation = 90;
  return t;
}

double
h_given_second(const PairCopula& s, double u, double v)
{
  switch (s.rotation) {
    case 90:
      return 1.0 - base_h(s, 1.0 - u, v);
    case 180:
      return 1.0 - base_h(s, 1.0 - u, 1.0 - v);
    case 270:
      return base_h(s, u, 1.0 - v);
    default:
      return base_h(s, u, v);
  }
}

double
hinv_given_second(const PairCopula& s, double p, double v)
{
  switch (s.rotation) {
    case 90:
      return 1.0 - base_hinv(s, 1.0 - p, v);
    case 180:
      return 1.0 - base_hinv(s, 1.0 - p, 1.0 - v);
    case 270:
      return base_hinv(s, p, 1.0 - v);
    default:
      return base_hinv(s, p, v);
  }
}

// generator ratio phi/phi' of the Archimedean families, tau = 1 + 4 int_0^1
double
archimedean_tau(const std::function<double(double)>& ratio)
{
  return 1.0 + 4.0 * stats::integrate(ratio, 0.0, 1.0, 1e-12);
}

double
frank_tau(double th)
{
  if (std::abs(th) < kFrankIndepThreshold)
    return 0.0;
  double a = std::abs(th);
  auto f = [](double t) { return t < 1e-12 ? 1.0 : t / std::expm1(t); };
  double debye = stats::integrate(f, 0.0, a, 1e-13) / a;
  double tau = 1.0 - 4.0 / a * (1.0 - debye);
  return th < 0 ? -tau : tau;
}

double
joe_tau(double th)
{
  auto ratio = [th](double t) {
    if (t >= 1.0)
      return 0.0;
    double s = std::pow(1.0 - t, th);
    return std::log1p(-s) * (1.0 - s) / (th * std::pow(1.0 - t, th - 1.0));
  };
  return archimedean_tau(ratio);
}

double
bb8_tau(double th, double de)
{
  double eta = -std::expm1(th * std::log1p(-de));
  auto ratio = [=](double t) {
    double base = 1.0 - de * t;
    if (base <= 0.0)
      return 0.0;
    double s = std::pow(base, th);
    return std::log((1.0 - s) / eta) * (1.0 - s) / (th * de * std::pow(base, th - 1.0));
  };
  return archimedean_tau(ratio);
}

double
base_tau(const PairCopula& s)
{
  const auto& p = s.params;
  switch (s.family) {
    case Family::independence:
      return 0.0;
    case Family::gaussian:
      return 2.0 / M_PI * std::asin(p(0));
    case Family::clayton:
      return p(0) / (p(0) + 2.0);
    case Family::gumbel:
      return 1.0 - 1.0 / p(0);
    case Family::frank:
      return frank_tau(p(0));
    case Family::joe:
      return joe_tau(p(0));
    case Family::bb8:
      return bb8_tau(p(0), p(1));
    case Family::nonparametric:
      return s.np->kendall_tau();
  }
  return 0.0;
}

bool
rotatable(Family f)
{
  return f == Family::clayton || f == Family::gumbel || f == Family::joe || f == Family::bb8;
}

} // namespace

// ---------------------------------------------------------------------------

std::string
to_string(Family f)
{
  switch (f) {
    case Family::independence:
      return "independence";
    case Family::gaussian:
      return "gaussian";
    case Family::clayton:
      return "clayton";
    case Family::gumbel:
      return "gumbel";
    case Family::frank:
      return "frank";
    case Family::joe:
      return "joe";
    case Family::bb8:
      return "bb8";
    case Family::nonparametric:
      return "nonparametric";
  }
  return "";
}

Family
family_from_string(const std::string& name)
{
  for (auto f : { Family::independence,
                  Family::gaussian,
                  Family::clayton,
                  Family::gumbel,
                  Family::frank,
                  Family::joe,
                  Family::bb8,
                  Family::nonparametric })
    if (to_string(f) == name)
      return f;
  throw UsageError("unknown copula family '" + name + "'");
}

SelectionCriterion
criterion_from_string(const std::string& name)
{
  if (name == "aic")
    return SelectionCriterion::aic;
  if (name == "bic")
    return SelectionCriterion::bic;
  if (name == "loglik")
    return SelectionCriterion::loglik;
  throw UsageError("unknown selection criterion '" + name + "'");
}

std::string
to_string(SelectionCriterion c)
{
  switch (c) {
    case SelectionCriterion::aic:
      return "aic";
    case SelectionCriterion::bic:
      return "bic";
    case SelectionCriterion::loglik:
      return "loglik";
  }
  return "";
}

int
param_count(Family f)
{
  switch (f) {
    case Family::independence:
    case Family::nonparametric:
      return 0;
    case Family::bb8:
      return 2;
    default:
      return 1;
  }
}

std::vector<int>
admissible_rotations(Family f)
{
  if (rotatable(f))
    return { 0, 90, 180, 270 };
  return { 0 };
}

PairCopula::PairCopula(Family f, int rot, Eigen::VectorXd par)
  : family(f)
  , rotation(rot)
  , params(std::move(par))
  , edf(static_cast<double>(param_count(f)))
{
  validate(*this);
}

void
validate(const PairCopula& s)
{
  auto fail = [&](const std::string& what) {
    throw DomainError(to_string(s.family) + ": " + what);
  };
  if (s.rotation != 0 && s.rotation != 90 && s.rotation != 180 && s.rotation != 270)
    fail("rotation must be one of 0, 90, 180, 270");
  if (s.rotation != 0 && !rotatable(s.family))
    fail("family does not take rotations");
  if (s.family == Family::nonparametric) {
    if (!s.np)
      fail("missing fitted estimator");
    return;
  }
  if (s.params.size() != param_count(s.family))
    fail("expected " + std::to_string(param_count(s.family)) + " parameter(s)");
  const double slack = 1e-12;
  switch (s.family) {
    case Family::gaussian:
      if (!(std::abs(s.params(0)) < 1.0))
        fail("correlation must lie in (-1, 1)");
      break;
    case Family::clayton:
      if (!(s.params(0) > 0.0 && s.params(0) <= 28.0 + slack))
        fail("parameter must lie in (0, 28]");
      break;
    case Family::gumbel:
    case Family::joe:
      if (!(s.params(0) >= 1.0 - slack && s.params(0) <= 50.0 + slack))
        fail("parameter must lie in [1, 50]");
      break;
    case Family::frank:
      if (!(std::abs(s.params(0)) <= 35.0 + slack) || s.params(0) == 0.0)
        fail("parameter must lie in [-35, 35] without 0");
      break;
    case Family::bb8:
      if (!(s.params(0) >= 1.0 - slack && s.params(0) <= 8.0 + slack))
        fail("theta must lie in [1, 8]");
      if (!(s.params(1) > 0.0 && s.params(1) <= 1.0 + slack))
        fail("delta must lie in (0, 1]");
      break;
    default:
      break;
  }
}

double
copula_log_pdf(const PairCopula& s, double u, double v)
{
  u = clamp_unit(u);
  v = clamp_unit(v);
  switch (s.rotation) {
    case 90:
      return base_log_pdf(s, 1.0 - u, v);
    case 180:
      return base_log_pdf(s, 1.0 - u, 1.0 - v);
    case 270:
      return base_log_pdf(s, u, 1.0 - v);
    default:
      return base_log_pdf(s, u, v);
  }
}

double
copula_pdf(const PairCopula& s, double u, double v)
{
  return std::exp(copula_log_pdf(s, u, v));
}

double
copula_cdf(const PairCopula& s, double u, double v)
{
  if (u <= 0.0 || v <= 0.0)
    return 0.0;
  if (u >= 1.0)
    return std::min(v, 1.0);
  if (v >= 1.0)
    return u;
  double c = 0.0;
  switch (s.rotation) {
    case 90:
      c = v - base_cdf(s, 1.0 - u, v);
      break;
    case 180:
      c = u + v - 1.0 + base_cdf(s, 1.0 - u, 1.0 - v);
      break;
    case 270:
      c = u - base_cdf(s, u, 1.0 - v);
      break;
    default:
      c = base_cdf(s, u, v);
  }
  return std::clamp(c, std::max(0.0, u + v - 1.0), std::min(u, v));
}

double
hfunc(const PairCopula& s, HDir dir, double u, double v)
{
  u = clamp_unit(u);
  v = clamp_unit(v);
  double h = 0.0;
  if (s.family == Family::nonparametric)
    h = s.np->hfunc(dir, u, v);
  else if (dir == HDir::given_second)
    h = h_given_second(s, u, v);
  else
    h = h_given_second(swapped(s), v, u);
  return std::clamp(h, 0.0, 1.0);
}

double
hinv(const PairCopula& s, HDir dir, double p, double cond)
{
  p = clamp_unit(p);
  cond = clamp_unit(cond);
  double x = 0.0;
  if (s.family == Family::nonparametric)
    x = s.np->hinv(dir, p, cond);
  else if (dir == HDir::given_second)
    x = hinv_given_second(s, p, cond);
  else
    x = hinv_given_second(swapped(s), p, cond);
  return clamp_unit(x);
}

Eigen::VectorXd
copula_log_pdf(const PairCopula& s, const PseudoObs& data)
{
  Eigen::VectorXd out(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i)
    out(i) = copula_log_pdf(s, data.u(i), data.v(i));
  return out;
}

Eigen::VectorXd
hfunc(const PairCopula& s, HDir dir, const PseudoObs& data)
{
  Eigen::VectorXd out(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i)
    out(i) = hfunc(s, dir, data.u(i), data.v(i));
  return out;
}

double
copula_loglik(const PairCopula& s, const PseudoObs& data)
{
  if (s.is_independence())
    return 0.0;
  return copula_log_pdf(s, data).sum();
}

double
kendall_tau(const PairCopula& s)
{
  double t = base_tau(s);
  if (s.rotation == 90 || s.rotation == 270)
    t = -t;
  return std::clamp(t, -1.0, 1.0);
}

Eigen::VectorXd
param_from_tau(Family family, int rotation, double tau)
{
  if (rotation != 0 && !rotatable(family))
    throw DomainError(to_string(family) + ": family does not take rotations");
  double t = (rotation == 90 || rotation == 270) ? -tau : tau;
  auto unattainable = [&]() {
    return DomainError(to_string(family) + ": Kendall's tau " + std::to_string(tau) +
                       " is not attainable at rotation " + std::to_string(rotation));
  };
  Eigen::VectorXd p(1);
  switch (family) {
    case Family::independence:
      if (tau != 0.0)
        throw unattainable();
      return Eigen::VectorXd();
    case Family::gaussian:
      if (!(std::abs(t) < 1.0))
        throw unattainable();
      p(0) = std::sin(M_PI / 2.0 * t);
      return p;
    case Family::clayton:
      if (!(t > 0.0 && t <= 28.0 / 30.0))
        throw unattainable();
      p(0) = 2.0 * t / (1.0 - t);
      return p;
    case Family::gumbel:
      if (!(t >= 0.0 && t <= 1.0 - 1.0 / 50.0))
        throw unattainable();
      p(0) = 1.0 / (1.0 - t);
      return p;
    case Family::frank: {
      if (t == 0.0 || !(std::abs(t) <= frank_tau(35.0)))
        throw unattainable();
      p(0) = stats::find_root([t](double th) { return frank_tau(th) - t; }, -35.0, 35.0, 1e-12);
      return p;
    }
    case Family::joe: {
      if (!(t >= 0.0 && t <= joe_tau(50.0)))
        throw unattainable();
      p(0) = stats::find_root([t](double th) { return joe_tau(th) - t; }, 1.0, 50.0, 1e-12);
      return p;
    }
    case Family::bb8:
    case Family::nonparametric:
      throw UnsupportedError(to_string(family) + ": no one-to-one map from Kendall's tau");
  }
  return p;
}

PairCopula
fit_pair_mle(const PseudoObs& data, Family family, int rotation)
{
  if (data.size() < 10)
    throw UsageError("fit_pair_mle: need at least 10 observations");
  if (family == Family::nonparametric)
    throw UsageError("fit_pair_mle: family must be parametric");
  bool degenerate = true;
  for (Eigen::Index i = 0; i < data.size() && degenerate; ++i) {
    auto interior = [](double x) { return x > kEps && x < 1.0 - kEps; };
    degenerate = !(interior(data.u(i)) && interior(data.v(i)));
  }
  if (degenerate)
    throw DegenerateDataError("fit_pair_mle: all observations lie on the boundary");

  if (family == Family::independence)
    return PairCopula(family, 0, Eigen::VectorXd());

  PairCopula spec;
  spec.family = family;
  spec.rotation = rotation;
  spec.edf = param_count(family);
  auto nll = [&](const Eigen::VectorXd& p) {
    spec.params = p;
    double ll = copula_log_pdf(spec, data).sum();
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::max() / 4;
  };

  if (family == Family::bb8) {
    // theta = 1 + 7 logistic(a), delta = logistic(b)
    auto to_par = [](const Eigen::VectorXd& z) {
      Eigen::VectorXd p(2);
      p(0) = 1.0 + 7.0 / (1.0 + std::exp(-z(0)));
      p(1) = std::max(1.0 / (1.0 + std::exp(-z(1))), 1e-6);
      return p;
    };
    auto obj = [&](const Eigen::VectorXd& z) { return nll(to_par(z)); };
    const std::array<std::array<double, 2>, 3> starts{ { { -1.5, 0.0 }, { 0.0, 1.5 }, { 1.5, 3.0 } } };
    stats::NelderMeadResult best{ Eigen::VectorXd(), std::numeric_limits<double>::infinity(), 0 };
    for (const auto& s : starts) {
      Eigen::VectorXd z0(2);
      z0 << s[0], s[1];
      auto r = stats::nelder_mead(obj, z0, 0.5, 1e-10, 500);
      if (r.value < best.value)
        best = r;
    }
    spec.params = to_par(best.x);
    spec.loglik = -best.value;
    validate(spec);
    return spec;
  }

  auto b = param_bounds(family);
  auto f1 = [&](double th) {
    Eigen::VectorXd p(1);
    p(0) = th;
    return nll(p);
  };
  auto [arg, val] = stats::minimize_scalar(f1, b.lo, b.hi, 1e-8, 500);

  // sample tau gives a second starting point; refine around it if it wins
  double tau = stats::kendall_tau(data.u(), data.v());
  try {
    double th0 = param_from_tau(family, rotation, tau)(0);
    th0 = std::clamp(th0, b.lo, b.hi);
    double v0 = f1(th0);
    if (v0 < val) {
      double w = 0.25 * (b.hi - b.lo);
      auto [a2, v2] = stats::minimize_scalar(
        f1, std::max(b.lo, th0 - w), std::min(b.hi, th0 + w), 1e-8, 500);
      if (v2 < val) {
        arg = a2;
        val = v2;
      }
    }
  } catch (const std::exception&) {
    // tau outside the family's range at this rotation
  }
  if (family == Family::frank && arg == 0.0)
    arg = kFrankIndepThreshold;
  spec.params = Eigen::VectorXd::Constant(1, arg);
  spec.loglik = -val;
  validate(spec);
  return spec;
}

PairCopula
select_pair_family(const PseudoObs& data,
                   const std::vector<Family>& candidates,
                   SelectionCriterion criterion)
{
  if (candidates.empty())
    throw UsageError("select_pair_family: empty candidate set");

  std::vector<Family> parametric;
  bool with_np = false;
  for (auto f : candidates) {
    if (f == Family::nonparametric)
      with_np = true;
    else if (f != Family::independence)
      parametric.push_back(f);
  }
  std::sort(parametric.begin(), parametric.end(), [](Family a, Family b) {
    return to_string(a) < to_string(b);
  });
  parametric.erase(std::unique(parametric.begin(), parametric.end()), parametric.end());

  auto score = [&](const PairCopula& c) {
    switch (criterion) {
      case SelectionCriterion::aic:
        return c.aic();
      case SelectionCriterion::bic:
        return c.bic(data.size());
      default:
        return -c.loglik;
    }
  };

  PairCopula best = fit_pair_mle(data, Family::independence, 0);
  double best_score = score(best);
  auto consider = [&](PairCopula c) {
    double s = score(c);
    if (s < best_score) {
      best_score = s;
      best = std::move(c);
    }
  };
  for (auto f : parametric)
    for (int rot : admissible_rotations(f))
      consider(fit_pair_mle(data, f, rot));

  if (with_np && data.size() >= NpCopula::kMinSample) {
    auto np = std::make_shared<const NpCopula>(fit_np_pair(data));
    PairCopula c;
    c.family = Family::nonparametric;
    c.np = np;
    c.edf = np->edf();
    // in-sample, like the parametric fits; the edf penalty accounts for the smoothing
    c.loglik = copula_loglik(c, data);
    consider(std::move(c));
  }
  return best;
}

std::vector<Family>
family_set(const std::string& name)
{
  if (name == "gaussian")
    return { Family::gaussian };
  if (name == "parametric")
    return { Family::bb8, Family::clayton, Family::frank, Family::gaussian, Family::gumbel, Family::joe };
  if (name == "pnp")
    return { Family::bb8,    Family::clayton, Family::frank,        Family::gaussian,
             Family::gumbel, Family::joe,     Family::nonparametric };
  throw UsageError("unknown copula set '" + name + "' (expected gaussian|parametric|pnp)");
}

void
to_json(nlohmann::json& j, const PairCopula& s)
{
  std::vector<double> par(s.params.data(), s.params.data() + s.params.size());
  j = nlohmann::json{ { "family", to_string(s.family) },
                      { "rotation", s.rotation },
                      { "params", par },
                      { "edf", s.edf },
                      { "loglik", s.loglik } };
  if (s.np)
    j["np"] = *s.np;
}

void
from_json(const nlohmann::json& j, PairCopula& s)
{
  s.family = family_from_string(j.at("family").get<std::string>());
  s.rotation = j.at("rotation").get<int>();
  auto par = j.at("params").get<std::vector<double>>();
  s.params = Eigen::Map<const Eigen::VectorXd>(par.data(), static_cast<Eigen::Index>(par.size()));
  s.edf = j.at("edf").get<double>();
  s.loglik = j.at("loglik").get<double>();
  s.np.reset();
  if (s.family == Family::nonparametric)
    s.np = std::make_shared<const NpCopula>(np_from_json(j.at("np")));
  validate(s);
}

} // namespace vinesem
