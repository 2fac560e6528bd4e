#include "vinesem/margins.hpp"
#include "vinesem/rng.hpp"
#include "vinesem/stats.hpp"

#include <array>

namespace vinesem {

namespace {

struct EmFit
{
  std::vector<MixtureComponent> comps;
  double loglik;
  bool converged;
};

double
mixture_log_pdf(const std::vector<MixtureComponent>& comps, double x)
{
  double m = -std::numeric_limits<double>::infinity();
  std::array<double, 16> terms{};
  size_t k = comps.size();
  for (size_t j = 0; j < k; ++j) {
    const auto& c = comps[j];
    terms[j] = std::log(c.weight) + normal_logpdf((x - c.mean) / c.sd) - std::log(c.sd);
    m = std::max(m, terms[j]);
  }
  double s = 0.0;
  for (size_t j = 0; j < k; ++j)
    s += std::exp(terms[j] - m);
  return m + std::log(s);
}

EmFit
run_em(const Eigen::VectorXd& x, std::vector<MixtureComponent> comps, const MarginOptions& opt,
       double sd_floor)
{
  const Eigen::Index n = x.size();
  const size_t k = comps.size();
  Eigen::MatrixXd resp(n, static_cast<Eigen::Index>(k));
  double prev = -std::numeric_limits<double>::infinity();
  double ll = prev;
  bool converged = false;

  for (int it = 0; it < opt.max_iter; ++it) {
    // E step
    for (size_t j = 0; j < k; ++j) {
      const auto& c = comps[j];
      resp.col(static_cast<Eigen::Index>(j)) =
        (std::log(c.weight) - std::log(c.sd) - kLogSqrt2Pi) -
        0.5 * ((x.array() - c.mean) / c.sd).square();
    }
    Eigen::ArrayXd rmax = resp.rowwise().maxCoeff().array();
    resp.array().colwise() -= rmax;
    resp = resp.array().exp().matrix();
    Eigen::ArrayXd rsum = resp.rowwise().sum().array();
    resp.array().colwise() /= rsum;
    ll = (rmax + rsum.log()).sum();
    if (std::abs(ll - prev) <= opt.tol * (1.0 + std::abs(ll))) {
      converged = true;
      break;
    }
    prev = ll;

    // M step
    for (size_t j = 0; j < k; ++j) {
      auto r = resp.col(static_cast<Eigen::Index>(j));
      double nk = r.sum();
      if (nk < 1e-8) {
        // empty component: keep it alive with a tiny weight
        comps[j].weight = 1e-8;
        continue;
      }
      double mu = r.dot(x) / nk;
      double var = r.dot((x.array() - mu).square().matrix()) / nk;
      comps[j] = { nk / static_cast<double>(n), mu, std::max(std::sqrt(var), sd_floor) };
    }
    double wsum = 0.0;
    for (const auto& c : comps)
      wsum += c.weight;
    for (auto& c : comps)
      c.weight /= wsum;
  }
  return { std::move(comps), ll, converged };
}

EmFit
fit_mixture_k(const Eigen::VectorXd& x, int k, const MarginOptions& opt, Rng& rng)
{
  const double sd = stats::sd_ml(x);
  const double sd_floor = 1e-3 * sd;
  EmFit best{ {}, -std::numeric_limits<double>::infinity(), false };
  for (int r = 0; r < opt.restarts; ++r) {
    std::vector<MixtureComponent> init;
    for (int j = 0; j < k; ++j) {
      double mu = stats::quantile(x, (j + 0.5) / k);
      if (r > 0)
        mu += 0.5 * sd * rng.normal() / k;
      init.push_back({ 1.0 / k, mu, sd / k });
    }
    auto fit = run_em(x, std::move(init), opt, sd_floor);
    if (fit.loglik > best.loglik)
      best = std::move(fit);
  }
  std::sort(best.comps.begin(), best.comps.end(), [](const auto& a, const auto& b) {
    return a.mean < b.mean;
  });
  return best;
}

double
kde_sum(const Eigen::VectorXd& s, double h, double x)
{
  return ((x - s.array()) / h).unaryExpr([](double t) { return normal_pdf(t); }).sum();
}

double
loo_log_sum(const Eigen::VectorXd& s, double h, Eigen::Index skip)
{
  Eigen::ArrayXd t = -0.5 * ((s(skip) - s.array()) / h).square() - kLogSqrt2Pi;
  t(skip) = -std::numeric_limits<double>::infinity();
  double m = t.maxCoeff();
  return m + std::log((t - m).exp().sum());
}

} // namespace

std::string
to_string(MarginKind k)
{
  switch (k) {
    case MarginKind::gaussian:
      return "gaussian";
    case MarginKind::mixture:
      return "mixture";
    case MarginKind::kde:
      return "kde";
  }
  return "";
}

MarginKind
margin_kind_from_string(const std::string& name)
{
  if (name == "gaussian")
    return MarginKind::gaussian;
  if (name == "mixture")
    return MarginKind::mixture;
  if (name == "kde")
    return MarginKind::kde;
  throw UsageError("unknown margin kind '" + name + "' (expected gaussian|mixture|kde)");
}

double
MarginModel::mean() const
{
  if (kind_ != MarginKind::gaussian)
    throw UsageError("mean(): not a gaussian margin");
  return comps_.front().mean;
}

double
MarginModel::sd() const
{
  if (kind_ != MarginKind::gaussian)
    throw UsageError("sd(): not a gaussian margin");
  return comps_.front().sd;
}

double
MarginModel::log_pdf(double x) const
{
  if (kind_ == MarginKind::kde) {
    double s = kde_sum(sample_, bandwidth_, x);
    return std::log(s / (static_cast<double>(sample_.size()) * bandwidth_));
  }
  return mixture_log_pdf(comps_, x);
}

double
MarginModel::pdf(double x) const
{
  return std::exp(log_pdf(x));
}

double
MarginModel::cdf(double x) const
{
  if (kind_ == MarginKind::kde)
    return ((x - sample_.array()) / bandwidth_)
      .unaryExpr([](double t) { return normal_cdf(t); })
      .mean();
  double s = 0.0;
  for (const auto& c : comps_)
    s += c.weight * normal_cdf((x - c.mean) / c.sd);
  return s;
}

double
MarginModel::pit(double x) const
{
  return clamp_unit(cdf(x));
}

Eigen::VectorXd
MarginModel::pit(const Eigen::VectorXd& x) const
{
  return x.unaryExpr([this](double v) { return pit(v); });
}

double
MarginModel::pit_inv(double u) const
{
  u = clamp_unit(u);
  if (kind_ == MarginKind::gaussian)
    return comps_.front().mean + comps_.front().sd * normal_quantile(u);
  double lo, hi;
  if (kind_ == MarginKind::kde) {
    lo = sample_.minCoeff() - 10.0 * bandwidth_;
    hi = sample_.maxCoeff() + 10.0 * bandwidth_;
  } else {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const auto& c : comps_) {
      lo = std::min(lo, c.mean - 10.0 * c.sd);
      hi = std::max(hi, c.mean + 10.0 * c.sd);
    }
  }
  auto f = [&](double x) { return cdf(x) - u; };
  while (f(lo) > 0.0)
    lo -= hi - lo;
  while (f(hi) < 0.0)
    hi += hi - lo;
  return stats::find_root(f, lo, hi, 1e-10 * std::max(1.0, hi - lo), 300);
}

MarginModel
make_gaussian_margin(double mean, double sd)
{
  if (!(sd > 0.0))
    throw DomainError("gaussian margin: sd must be positive");
  MarginModel m;
  m.kind_ = MarginKind::gaussian;
  m.comps_ = { { 1.0, mean, sd } };
  m.edf_ = 2.0;
  return m;
}

MarginModel
fit_margin(const Eigen::VectorXd& x, MarginKind kind, const MarginOptions& opt)
{
  const Eigen::Index n = x.size();
  if (n < 20)
    throw InsufficientDataError("fit_margin: need at least 20 observations, got " +
                                std::to_string(n));
  if (!x.allFinite())
    throw UsageError("fit_margin: non-finite value in data");
  if (x.maxCoeff() == x.minCoeff())
    throw DegenerateDataError("fit_margin: constant column");

  const double nd = static_cast<double>(n);
  MarginModel m;
  m.kind_ = kind;
  m.n_ = n;
  switch (kind) {
    case MarginKind::gaussian: {
      m.comps_ = { { 1.0, stats::mean(x), stats::sd_ml(x) } };
      m.edf_ = 2.0;
      break;
    }
    case MarginKind::mixture: {
      if (opt.kmax < 1)
        throw UsageError("fit_margin: kmax must be at least 1");
      if (opt.kmax > 16)
        throw UsageError("fit_margin: kmax above 16 is not supported");
      Rng rng(opt.seed);
      double best_bic = std::numeric_limits<double>::infinity();
      for (int k = 1; k <= opt.kmax; ++k) {
        auto fit = fit_mixture_k(x, k, opt, rng);
        double edf = 3.0 * k - 1.0;
        double bic = -2.0 * fit.loglik + std::log(nd) * edf;
        m.bic_trace_.push_back(bic);
        if (bic < best_bic) {
          best_bic = bic;
          m.comps_ = std::move(fit.comps);
          m.converged_ = fit.converged;
          m.edf_ = edf;
        }
      }
      break;
    }
    case MarginKind::kde: {
      double sd = stats::sd_ml(x);
      double iqr = stats::quantile(x, 0.75) - stats::quantile(x, 0.25);
      double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
      m.sample_ = x;
      m.bandwidth_ = 0.9 * spread * std::pow(nd, -0.2);
      break;
    }
  }
  auto gof = margin_gof(m, x);
  m.loglik_ = gof.loglik;
  m.edf_ = gof.edf;
  return m;
}

MarginGof
margin_gof(const MarginModel& model, const Eigen::VectorXd& x)
{
  const double nd = static_cast<double>(x.size());
  double ll = 0.0, edf = model.edf();
  if (model.kind() == MarginKind::kde) {
    const auto& s = model.sample();
    const double h = model.bandwidth();
    const bool training = s.size() == x.size() && s == x;
    const double k0 = normal_pdf(0.0);
    edf = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double full = kde_sum(s, h, x(i));
      if (training) {
        double others = full - k0;
        // an isolated point: the neighbour sum is lost to cancellation, redo it in log space
        double log_others = others > 1e-8 * k0 ? std::log(others) : loo_log_sum(s, h, i);
        ll += log_others - std::log((nd - 1.0) * h);
        edf += k0 / full;
      } else {
        ll += std::log(full / (static_cast<double>(s.size()) * h));
      }
    }
    if (!training)
      edf = model.edf();
  } else {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      ll += model.log_pdf(x(i));
  }
  return { ll, -2.0 * ll + 2.0 * edf, -2.0 * ll + std::log(nd) * edf, edf };
}

void
to_json(nlohmann::json& j, const MarginModel& m)
{
  j = nlohmann::json{ { "kind", to_string(m.kind()) },
                      { "loglik", m.loglik() },
                      { "edf", m.edf() },
                      { "n", m.n() } };
  if (m.kind() == MarginKind::kde) {
    j["bandwidth"] = m.bandwidth();
    j["boundary"] = m.boundary();
    j["sample"] = std::vector<double>(m.sample().data(), m.sample().data() + m.sample().size());
  } else {
    auto comps = nlohmann::json::array();
    for (const auto& c : m.components())
      comps.push_back({ { "weight", c.weight }, { "mean", c.mean }, { "sd", c.sd } });
    j["components"] = comps;
    j["converged"] = m.converged();
  }
}

void
from_json(const nlohmann::json& j, MarginModel& m)
{
  m = MarginModel();
  m.kind_ = margin_kind_from_string(j.at("kind").get<std::string>());
  m.loglik_ = j.at("loglik").get<double>();
  m.edf_ = j.at("edf").get<double>();
  m.n_ = j.at("n").get<Eigen::Index>();
  if (m.kind_ == MarginKind::kde) {
    auto s = j.at("sample").get<std::vector<double>>();
    m.sample_ = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    m.bandwidth_ = j.at("bandwidth").get<double>();
    if (!(m.bandwidth_ > 0.0) || s.empty())
      throw DomainError("kde margin: bandwidth must be positive and sample non-empty");
  } else {
    double wsum = 0.0;
    for (const auto& c : j.at("components")) {
      MixtureComponent mc{ c.at("weight").get<double>(), c.at("mean").get<double>(),
                           c.at("sd").get<double>() };
      if (!(mc.sd > 0.0) || !(mc.weight > 0.0))
        throw DomainError("margin component with non-positive sd or weight");
      wsum += mc.weight;
      m.comps_.push_back(mc);
    }
    if (m.comps_.empty() || std::abs(wsum - 1.0) > 1e-6)
      throw DomainError("margin mixture weights must sum to one");
    m.converged_ = j.value("converged", true);
  }
}

} // namespace vinesem
