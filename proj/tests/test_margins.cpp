#include <doctest.h>

#include "vinesem/io.hpp"
#include "vinesem/margins.hpp"
#include "vinesem/rng.hpp"
#include "vinesem/stats.hpp"

using namespace vinesem;

namespace {

const Dataset&
reference()
{
  static const Dataset d = log_transform(read_csv(VINESEM_DATA_DIR "/sachs_cd3cd28_aktinhib.csv"));
  return d;
}

Eigen::VectorXd
two_bumps(Eigen::Index n, uint64_t seed)
{
  Rng rng(seed);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x(i) = (i % 2 == 0 ? 0.0 : 6.0) + rng.normal();
  return x;
}

std::vector<MarginModel>
fitted_zoo()
{
  auto x = two_bumps(400, 3);
  return { fit_margin(x, MarginKind::gaussian), fit_margin(x, MarginKind::mixture),
           fit_margin(x, MarginKind::kde) };
}

} // namespace

TEST_CASE("gaussian margin of pip3")
{
  auto m = fit_margin(reference().column("pip3"), MarginKind::gaussian);
  CHECK(m.mean() == doctest::Approx(3.52).epsilon(0.01 / 3.52));
  // the reference second parameter is the variance
  CHECK(std::abs(m.sd() * m.sd() - 0.61) < 0.01);
  auto g = margin_gof(m, reference().column("pip3"));
  CHECK(std::abs(g.loglik - -986.90) < 0.5);
  CHECK(std::abs(g.aic - 1977.81) < 0.5);
  CHECK(std::abs(g.bic - 1987.29) < 0.5);
  CHECK(g.edf == 2.0);
}

TEST_CASE("gaussian fit is the ML estimate")
{
  Eigen::VectorXd x(20);
  for (int i = 0; i < 20; ++i)
    x(i) = i * i * 0.1;
  auto m = fit_margin(x, MarginKind::gaussian);
  double mu = x.mean();
  double var = (x.array() - mu).square().sum() / 20.0;
  CHECK(m.mean() == doctest::Approx(mu));
  CHECK(m.sd() == doctest::Approx(std::sqrt(var)));
  double ll = 0.0;
  for (int i = 0; i < 20; ++i)
    ll += -0.5 * std::log(2 * M_PI * var) - (x(i) - mu) * (x(i) - mu) / (2 * var);
  CHECK(m.loglik() == doctest::Approx(ll));
  CHECK(m.pit(mu) == doctest::Approx(0.5));
}

TEST_CASE("mixture recovers two separated components")
{
  auto m = fit_margin(two_bumps(2000, 1), MarginKind::mixture);
  REQUIRE(m.components().size() == 2);
  CHECK(std::abs(m.components()[0].mean - 0.0) < 0.15);
  CHECK(std::abs(m.components()[1].mean - 6.0) < 0.15);
  CHECK(m.edf() == 5.0);
  const auto& trace = m.bic_trace();
  CHECK(trace.size() == 5);
  double chosen = -2.0 * m.loglik() + std::log(2000.0) * m.edf();
  for (double b : trace)
    CHECK(chosen <= b + 1e-9);
}

TEST_CASE("mixture likelihood agrees with a direct sum")
{
  auto x = two_bumps(300, 5);
  auto m = fit_margin(x, MarginKind::mixture);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double f = 0.0;
    for (const auto& c : m.components())
      f += c.weight * std::exp(-0.5 * std::pow((x(i) - c.mean) / c.sd, 2)) / (c.sd * std::sqrt(2 * M_PI));
    ll += std::log(f);
  }
  CHECK(m.loglik() == doctest::Approx(ll).epsilon(1e-10));
  double w = 0.0;
  for (const auto& c : m.components()) {
    CHECK(c.weight > 0.0);
    CHECK(c.weight < 1.0);
    CHECK(c.sd > 0.0);
    w += c.weight;
  }
  CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("kde bandwidth, leave-one-out likelihood and edf")
{
  auto x = two_bumps(150, 7);
  auto m = fit_margin(x, MarginKind::kde);
  const double n = 150.0;

  Eigen::VectorXd s = x;
  std::sort(s.data(), s.data() + s.size());
  auto q = [&](double p) {
    double h = (n - 1) * p;
    auto lo = static_cast<Eigen::Index>(std::floor(h));
    return s(lo) + (h - lo) * (s(lo + 1) - s(lo));
  };
  double sd = std::sqrt((x.array() - x.mean()).square().mean());
  double h = 0.9 * std::min(sd, (q(0.75) - q(0.25)) / 1.34) * std::pow(n, -0.2);
  CHECK(m.bandwidth() == doctest::Approx(h).epsilon(1e-12));

  double ll = 0.0, edf = 0.0;
  for (int i = 0; i < 150; ++i) {
    double others = 0.0, all = 0.0;
    for (int j = 0; j < 150; ++j) {
      double k = std::exp(-0.5 * std::pow((x(i) - x(j)) / h, 2)) / std::sqrt(2 * M_PI);
      all += k;
      if (j != i)
        others += k;
    }
    ll += std::log(others / ((n - 1) * h));
    edf += (1.0 / std::sqrt(2 * M_PI)) / all;
  }
  CHECK(m.loglik() == doctest::Approx(ll).epsilon(1e-10));
  CHECK(m.edf() == doctest::Approx(edf).epsilon(1e-10));
  CHECK(m.boundary() == "none");
}

TEST_CASE("densities integrate to one")
{
  for (const auto& m : fitted_zoo()) {
    CAPTURE(to_string(m.kind()));
    double total = stats::integrate([&](double t) { return m.pdf(t); }, -30.0, 40.0, 1e-10);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("pit is increasing and inverted by pit_inv")
{
  auto x = two_bumps(400, 3);
  for (const auto& m : fitted_zoo()) {
    CAPTURE(to_string(m.kind()));
    double prev = 0.0;
    for (double t = x.minCoeff(); t <= x.maxCoeff(); t += 0.01) {
      double u = m.pit(t);
      CHECK(u > prev);
      prev = u;
      CHECK(std::abs(m.pit_inv(u) - t) < 1e-7);
    }
  }
}

TEST_CASE("samples drawn through pit_inv look uniform after pit")
{
  for (const auto& m : fitted_zoo()) {
    CAPTURE(to_string(m.kind()));
    Rng rng(31);
    Eigen::VectorXd u(10000);
    for (Eigen::Index i = 0; i < u.size(); ++i)
      u(i) = m.pit(m.pit_inv(rng.uniform()));
    double ks = stats::ks_statistic(u, [](double t) { return std::clamp(t, 0.0, 1.0); });
    CHECK(ks < stats::ks_critical_1pct(10000));
  }
}

TEST_CASE("mixture never loses to a single gaussian on the reference data")
{
  for (const auto& name : reference().names) {
    CAPTURE(name);
    auto x = reference().column(name);
    auto g = margin_gof(fit_margin(x, MarginKind::gaussian), x);
    auto m = margin_gof(fit_margin(x, MarginKind::mixture), x);
    CHECK(m.bic <= g.bic + 1e-6);
  }
}

TEST_CASE("information criteria identities")
{
  for (const auto& m : fitted_zoo()) {
    auto g = margin_gof(m, two_bumps(400, 3));
    CHECK(g.aic == doctest::Approx(-2 * g.loglik + 2 * g.edf));
    CHECK(g.aic - g.bic == doctest::Approx((2 - std::log(400.0)) * g.edf));
  }
}

TEST_CASE("invalid input")
{
  CHECK_THROWS_AS(fit_margin(Eigen::VectorXd::Constant(50, 2.0), MarginKind::gaussian),
                  DegenerateDataError);
  CHECK_THROWS_AS(fit_margin(Eigen::VectorXd::LinSpaced(19, 0, 1), MarginKind::kde),
                  InsufficientDataError);
  MarginOptions opt;
  opt.kmax = 0;
  CHECK_THROWS_AS(fit_margin(two_bumps(50, 1), MarginKind::mixture, opt), UsageError);
  CHECK_THROWS_AS(margin_kind_from_string("beta"), UsageError);
}

TEST_CASE("json round trip")
{
  for (const auto& m : fitted_zoo()) {
    nlohmann::json j = m;
    auto back = j.get<MarginModel>();
    CHECK(back.kind() == m.kind());
    for (double t : { -1.0, 0.5, 3.0, 7.5 }) {
      CHECK(back.pit(t) == m.pit(t));
      CHECK(back.pdf(t) == m.pdf(t));
    }
  }
}
