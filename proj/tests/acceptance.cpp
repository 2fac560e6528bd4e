// Acceptance checks on the reference data. One PASS/FAIL line per criterion; exits
// nonzero when any criterion fails.
#include "vinesem/copula.hpp"
#include "vinesem/rng.hpp"
#include "vinesem/simulate.hpp"
#include "vinesem/stats.hpp"

#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>

using namespace vinesem;

namespace {

int failures = 0;

void
report(int id, bool ok, const std::string& title, const std::string& detail)
{
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok)
    ++failures;
}

void
note(const std::string& title, bool ok, const std::string& detail)
{
  std::printf("%s [note] %s: %s\n", ok ? "PASS" : "FAIL", title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok)
    ++failures;
}

std::string
fmt(const char* f, double a)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double
seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool
near(double got, double want, double tol)
{
  return std::abs(got - want) <= tol;
}

// collects sub-check failures with a short description of the first few
struct Checks
{
  int total = 0;
  int failed = 0;
  std::string first;

  void operator()(bool ok, const std::string& what)
  {
    ++total;
    if (!ok && failed++ < 3)
      first += (first.empty() ? "" : "; ") + what;
  }
  std::string summary() const
  {
    return std::to_string(total - failed) + "/" + std::to_string(total) + " checks" +
           (first.empty() ? "" : " (" + first + ")");
  }
};

std::string
join(const std::vector<std::string>& v)
{
  std::string s;
  for (const auto& x : v)
    s += (s.empty() ? "" : ",") + x;
  return s;
}

std::set<std::string>
edge_set(const std::vector<Edge>& edges)
{
  std::set<std::string> s;
  for (const auto& [p, c] : edges)
    s.insert(p + "->" + c);
  return s;
}

// correlation matrix over (response, order...) of a gaussian-pair D-vine
Eigen::MatrixXd
vine_correlation(const DVineRegModel& vine)
{
  const auto k = static_cast<Eigen::Index>(vine.size());
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(k + 1, k + 1);
  for (Eigen::Index t = 0; t < k; ++t)
    for (Eigen::Index i = 0; i + t + 1 <= k; ++i) {
      const Eigen::Index j = i + t + 1;
      const auto& pc = vine.pairs()[static_cast<size_t>(t)][static_cast<size_t>(i)];
      double rho = pc.is_independence() ? 0.0 : pc.params(0);
      if (t == 0) {
        r(i, j) = r(j, i) = rho;
        continue;
      }
      Eigen::MatrixXd s = r.block(i + 1, i + 1, t, t);
      Eigen::VectorXd ri = r.col(i).segment(i + 1, t), rj = r.col(j).segment(i + 1, t);
      Eigen::VectorXd si = s.ldlt().solve(ri), sj = s.ldlt().solve(rj);
      r(i, j) = r(j, i) = ri.dot(sj) + rho * std::sqrt((1 - ri.dot(si)) * (1 - rj.dot(sj)));
    }
  return r;
}

// mean and covariance of a gaussian-margin, gaussian-copula SEM over dag.nodes
std::pair<Eigen::VectorXd, Eigen::MatrixXd>
implied_normal(const SemModel& m)
{
  const auto& names = m.dag.nodes;
  const auto p = static_cast<Eigen::Index>(names.size());
  auto idx = [&](const std::string& s) {
    return static_cast<Eigen::Index>(std::find(names.begin(), names.end(), s) - names.begin());
  };
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd b(p), omega(p);
  for (const auto& node : names) {
    const auto& vine = m.vine(node);
    const auto& mg = m.margin(node);
    auto r = vine_correlation(vine);
    const auto k = r.rows() - 1;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    double s2 = 1.0;
    if (k > 0) {
      beta = r.bottomRightCorner(k, k).ldlt().solve(r.col(0).tail(k));
      s2 = 1.0 - r.col(0).tail(k).dot(beta);
    }
    b(idx(node)) = mg.mean();
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto& par = m.margin(vine.order()[static_cast<size_t>(j)]);
      double coef = mg.sd() * beta(j) / par.sd();
      a(idx(vine.order()[static_cast<size_t>(j)]), idx(node)) = coef;
      b(idx(node)) -= coef * par.mean();
    }
    omega(idx(node)) = mg.sd() * mg.sd() * s2;
  }
  Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(p, p) - a.transpose()).inverse();
  return { inv * b, inv * omega.asDiagonal() * inv.transpose() };
}

double
mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma)
{
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  Eigen::MatrixXd l = llt.matrixL();
  Eigen::VectorXd d = x - mu;
  return -0.5 * (static_cast<double>(x.size()) * std::log(2 * M_PI) + 2.0 * l.diagonal().array().log().sum() +
                 d.dot(llt.solve(d)));
}

PairCopula
make(Family f, int rot, std::vector<double> p)
{
  return PairCopula(f, rot, Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
}

// ---------------------------------------------------------------------------

void
lgbn_reproduction(const Dataset& data, const DagSpec& dag)
{
  auto t0 = std::chrono::steady_clock::now();
  auto model = fit_lgbn(data, dag);
  auto gof = lgbn_gof_table(model);
  double secs = seconds_since(t0);
  const auto& t = gof.total;
  double akt = model.node("akt").loglik;
  bool ok = near(t.loglik, -9189.29, 1.0) && near(t.aic, 18462.58, 2.0) && near(t.bic, 18666.37, 2.0) &&
            t.edf == 42.0 && near(akt, -196.03, 0.5) && secs < 1.0;
  std::ostringstream d;
  d << "loglik " << fmt("%.2f", t.loglik) << " (want -9189.29 +-1), AIC " << fmt("%.2f", t.aic)
    << " (18462.58 +-2), BIC " << fmt("%.2f", t.bic) << " (18666.37 +-2), params " << t.edf << ", akt "
    << fmt("%.2f", akt) << ", " << fmt("%.3f", secs) << " s";
  report(1, ok, "LGBN reproduction", d.str());
}

void
gaussian_sem_check(const SemModel& m, double secs, const Dataset& data, const DagSpec& dag)
{
  auto cop = copulas_gof_table(m, data);
  auto all = gof_table(m, data);
  auto lg = lgbn_gof_table(fit_lgbn(data, dag));
  size_t kept = dag.edges.size() - pruned_edges(m).size();
  bool ok = near(cop.total.loglik, 1497.84, 5.0) && near(cop.total.aic, -2971.68, 10.0) &&
            near(all.total.loglik, lg.total.loglik, 10.0) && kept == 12 && secs < 10.0;
  std::ostringstream d;
  d << "copula loglik " << fmt("%.2f", cop.total.loglik) << " (1497.84 +-5), AIC_C " << fmt("%.2f", cop.total.aic)
    << " (-2971.68 +-10), total " << fmt("%.2f", all.total.loglik) << " vs LGBN " << fmt("%.2f", lg.total.loglik)
    << ", " << kept << " edges kept, fit " << fmt("%.2f", secs) << " s";
  report(2, ok, "Gaussian-config SEM", d.str());
}

void
pruning_check(const SemModel& kde_pnp, const SemModel& mix_pnp, const DagSpec& dag)
{
  const std::set<std::string> expected{ "mek->erk", "plc->pkc", "pip3->akt" };
  auto removed = edge_set(pruned_edges(kde_pnp));
  std::vector<std::string> extra, missing;
  for (const auto& e : removed)
    if (!expected.count(e))
      extra.push_back(e);
  for (const auto& e : expected)
    if (!removed.count(e))
      missing.push_back(e);
  size_t deviation = extra.size() + missing.size();
  size_t kept = dag.edges.size() - removed.size();
  std::ostringstream d;
  d << kept << " of 20 kept, removed {" << join({ removed.begin(), removed.end() }) << "}";
  if (deviation == 0)
    d << ", matches exactly";
  else
    d << ", DEVIATION: extra {" << join(extra) << "} missing {" << join(missing) << "}";
  auto mix_removed = edge_set(pruned_edges(mix_pnp));
  d << "; mixture-margin pnp removes {" << join({ mix_removed.begin(), mix_removed.end() }) << "}";
  report(3, deviation <= 1, "Edge pruning, pnp config (kde margins)", d.str());
}

void
order_check(const SemModel& m)
{
  using V = std::vector<std::string>;
  bool ok = m.vine("raf").order() == V{ "pka", "pkc" } && m.vine("mek").order() == V{ "raf", "pkc" } &&
            m.vine("akt").order() == V{ "erk", "pka" };
  report(4, ok, "Parent orders, gaussian config",
         "raf<-(" + join(m.vine("raf").order()) + ") mek<-(" + join(m.vine("mek").order()) + ") akt<-(" +
           join(m.vine("akt").order()) + ")");
}

void
margin_check(const Dataset& data, const DagSpec& dag)
{
  auto x = data.column("pip3");
  auto g = fit_margin(x, MarginKind::gaussian);
  auto gof = margin_gof(g, x);
  // the reference second parameter is the variance of the normal law
  bool pip3 = near(g.mean(), 3.52, 0.01) && near(g.sd() * g.sd(), 0.61, 0.01) && near(gof.loglik, -986.90, 0.5) &&
              near(gof.aic, 1977.81, 0.5) && near(gof.bic, 1987.29, 0.5);
  std::vector<std::string> not_better;
  for (const auto& node : dag.nodes) {
    auto col = data.column(node);
    double mix = margin_gof(fit_margin(col, MarginKind::mixture), col).bic;
    double gau = margin_gof(fit_margin(col, MarginKind::gaussian), col).bic;
    if (!(mix < gau))
      not_better.push_back(node + " (" + fmt("%.2f", mix) + " vs " + fmt("%.2f", gau) + ")");
  }
  std::ostringstream d;
  d << "pip3 mean " << fmt("%.3f", g.mean()) << " var " << fmt("%.3f", g.sd() * g.sd()) << " gof ("
    << fmt("%.2f", gof.loglik) << ", " << fmt("%.2f", gof.aic) << ", " << fmt("%.2f", gof.bic) << ")"
    << (pip3 ? "" : " OUT OF TOLERANCE") << "; mixture BIC < gaussian BIC for "
    << dag.nodes.size() - not_better.size() << "/" << dag.nodes.size() << " nodes";
  if (!not_better.empty())
    d << ", not for " << join(not_better);
  report(5, pip3 && not_better.empty(), "Marginal fixtures", d.str());
}

void
copula_suite()
{
  auto t0 = std::chrono::steady_clock::now();
  std::vector<PairCopula> zoo;
  for (double r : { -0.7, 0.2, 0.8 })
    zoo.push_back(make(Family::gaussian, 0, { r }));
  for (double t : { -5.0, 1.0, 10.0 })
    zoo.push_back(make(Family::frank, 0, { t }));
  for (double t : { 0.5, 2.0, 8.0 })
    zoo.push_back(make(Family::clayton, 0, { t }));
  for (double t : { 1.2, 2.0, 5.0 })
    zoo.push_back(make(Family::gumbel, 0, { t }));
  for (double t : { 1.3, 2.0, 5.0 })
    zoo.push_back(make(Family::joe, 0, { t }));
  zoo.push_back(make(Family::bb8, 0, { 2.0, 0.5 }));
  zoo.push_back(make(Family::bb8, 0, { 4.0, 0.9 }));
  zoo.push_back(make(Family::bb8, 0, { 6.0, 0.3 }));

  Checks c;
  uint64_t seed = 100;
  for (const auto& base : zoo) {
    for (int rot : admissible_rotations(base.family)) {
      PairCopula s = base;
      s.rotation = rot;
      std::string name = to_string(s.family) + "/" + std::to_string(rot) + " " + fmt("%g", s.params(0));
      if (rot == 0 || rot == 90) {
        double total = stats::integrate(
          [&](double u) { return stats::integrate([&](double v) { return copula_pdf(s, u, v); }, 0.0, 1.0, 1e-7); },
          0.0, 1.0, 1e-6);
        c(near(total, 1.0, 1e-3), name + " density mass " + fmt("%.5f", total));
      }
      const double d = 1e-6;
      for (double u = 0.05; u < 0.96; u += 0.15)
        for (double v = 0.05; v < 0.96; v += 0.15) {
          double fd = (copula_cdf(s, u, v + d) - copula_cdf(s, u, v - d)) / (2 * d);
          c(near(hfunc(s, HDir::given_second, u, v), fd, 1e-5), name + " h vs finite difference");
        }
      for (int i = 1; i <= 9; ++i)
        for (int j = 1; j <= 9; ++j) {
          double a = i / 10.0, b = j / 10.0;
          c(near(hinv(s, HDir::given_second, hfunc(s, HDir::given_second, a, b), b), a, 1e-8),
            name + " hinv(h) roundtrip");
          c(near(hfunc(s, HDir::given_second, hinv(s, HDir::given_second, a, b), b), a, 1e-8),
            name + " h(hinv) roundtrip");
        }
      if (rot == 0 || rot == 90) {
        Rng rng(seed++);
        const Eigen::Index n = 100000;
        Eigen::VectorXd u(n), v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          v(i) = rng.uniform();
          u(i) = hinv(s, HDir::given_second, rng.uniform(), v(i));
        }
        double tau = stats::kendall_tau(u, v);
        c(near(tau, kendall_tau(s), 0.01), name + " simulated tau " + fmt("%.4f", tau));
      }
      if (rot == 90 || rot == 270)
        c(kendall_tau(s) == -kendall_tau(base), name + " tau negation");
    }
  }
  double secs = seconds_since(t0);
  report(6, c.failed == 0 && secs < 60.0, "Copula property suite",
         c.summary() + ", " + fmt("%.1f", secs) + " s");
}

void
gaussian_oracle()
{
  // y, x1, x2 normal with known moments and unit variances, so the 0.03 tolerance
  // is a few standard errors of the fitted quantiles at n = 5000; y responds to x1 and x2
  Eigen::Matrix3d corr;
  corr << 1.0, 0.6, 0.4, 0.6, 1.0, 0.3, 0.4, 0.3, 1.0;
  Eigen::Vector3d mu(1.0, -2.0, 0.5), sd(1.0, 1.0, 1.0);
  Eigen::Matrix3d sigma = sd.asDiagonal() * corr * sd.asDiagonal();
  Eigen::Matrix3d l = sigma.llt().matrixL();
  const Eigen::Index n = 5000;
  Rng rng(77);
  Dataset data{ { "y", "x1", "x2" }, Eigen::MatrixXd(n, 3) };
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Vector3d e(rng.normal(), rng.normal(), rng.normal());
    data.values.row(i) = (mu + l * e).transpose();
  }
  auto dag = load_dag({ "x1", "x2", "y" }, { { "x1", "x2" }, { "x1", "y" }, { "x2", "y" } });
  auto m = fit_sem(data, dag);

  Checks c;
  Eigen::Vector2d syx = sigma.block<1, 2>(0, 1).transpose();
  Eigen::Matrix2d sxx = sigma.block<2, 2>(1, 1);
  Eigen::Vector2d beta = sxx.ldlt().solve(syx);
  double csd = std::sqrt(sigma(0, 0) - syx.dot(beta));
  double worst = 0.0;
  for (double q1 : { 0.2, 0.5, 0.8 })
    for (double q2 : { 0.2, 0.5, 0.8 }) {
      double x1 = mu(1) + sd(1) * normal_quantile(q1), x2 = mu(2) + sd(2) * normal_quantile(q2);
      double cmean = mu(0) + beta.dot(Eigen::Vector2d(x1 - mu(1), x2 - mu(2)));
      UnitValues u{ { "x1", m.margin("x1").pit(x1) }, { "x2", m.margin("x2").pit(x2) } };
      for (double a : { 0.1, 0.5, 0.9 }) {
        double got = m.margin("y").pit_inv(m.vine("y").cond_quantile(a, u));
        double want = cmean + csd * normal_quantile(a);
        worst = std::max(worst, std::abs(got - want));
        c(near(got, want, 0.03), "quantile " + fmt("%.3f", got) + " vs " + fmt("%.3f", want));
      }
    }
  auto [imu, isigma] = implied_normal(m);
  double worst_d = 0.0;
  for (Eigen::Index i = 0; i < 20; ++i) {
    auto row = data.row(i * 97);
    Eigen::VectorXd x(3);
    for (Eigen::Index k = 0; k < 3; ++k)
      x(k) = row.at(dag.nodes[static_cast<size_t>(k)]);
    double got = joint_logdensity(m, row), want = mvn_logpdf(x, imu, isigma);
    worst_d = std::max(worst_d, std::abs(got - want));
    c(near(got, want, 1e-4), "joint density");
  }
  report(7, c.failed == 0, "Gaussian oracle suite",
         c.summary() + ", max quantile error " + fmt("%.4f", worst) + ", max log-density error " +
           fmt("%.2e", worst_d));
}

void
simulation_suite(const std::vector<std::pair<std::string, const SemModel*>>& models,
                 const LgbnModel& lgbn,
                 const Dataset& data,
                 const DagSpec& dag)
{
  Checks c;
  const SemModel& pnp = *models[1].second;
  auto a = sample_sem(pnp, { 845, 2024 });
  auto b = sample_sem(pnp, { 845, 2024 });
  c(a.values == b.values, "pnp rerun differs");
  c(sample_lgbn(lgbn, { 845, 2024 }).values == sample_lgbn(lgbn, { 845, 2024 }).values, "lgbn rerun differs");

  for (const auto& node : dag.nodes) {
    const auto& mg = pnp.margin(node);
    double ks = stats::ks_statistic(a.column(node), [&](double x) { return mg.cdf(x); });
    c(ks < stats::ks_critical_1pct(845), "KS " + node + " " + fmt("%.4f", ks));
  }
  double tau = stats::kendall_tau(a.column("akt"), a.column("erk"));
  c(near(tau, 0.67, 0.05), "tau(akt, erk) " + fmt("%.3f", tau));

  Eigen::VectorXd train = Eigen::VectorXd::Zero(data.rows());
  for (const auto& node : dag.nodes)
    train += data.column(node);
  auto sum_check = [&](const std::string& name, const Dataset& sim) {
    Eigen::VectorXd s = sim.values.rowwise().sum();
    double se = std::sqrt((std::pow(stats::sd_ml(s), 2) + std::pow(stats::sd_ml(train), 2)) / 845.0);
    double diff = s.mean() - train.mean();
    c(std::abs(diff) < 3.0 * se, name + " row-sum mean off by " + fmt("%.3f", diff / se) + " SE");
  };
  for (const auto& [name, model] : models)
    sum_check(name, sample_sem(*model, { 845, 99 }));
  sum_check("lgbn", sample_lgbn(lgbn, { 845, 99 }));
  report(8, c.failed == 0, "Simulation suite", c.summary() + ", tau(akt,erk) " + fmt("%.3f", tau));
}

void
median_path_check(const SemModel& m, const Dataset& data)
{
  // LGBN on the selected parents only, so its coefficients match the D-vine fits
  std::vector<Edge> kept;
  for (const auto& node : m.dag.nodes)
    for (const auto& p : m.vine(node).order())
      kept.emplace_back(p, node);
  auto lg = fit_lgbn(data, load_dag(m.dag.nodes, kept));
  auto path = cond_median_path(m, 0.5);
  std::map<std::string, double> iterated;
  double worst = 0.0;
  std::string worst_node;
  for (const auto& [node, v] : path) {
    double want = m.dag.parents(node).empty() ? stats::quantile(data.column(node), 0.5)
                                              : lgbn_cond_params(lg, node, iterated).first;
    iterated[node] = want;
    if (std::abs(v - want) >= worst) {
      worst = std::abs(v - want);
      worst_node = node;
    }
  }
  report(9, path.size() == 11 && worst < 0.05, "Conditional median path",
         std::to_string(path.size()) + " nodes, max |path - LGBN| " + fmt("%.4f", worst) + " at " + worst_node);
}

} // namespace

int
main()
{
  auto data = log_transform(read_csv(VINESEM_DATA_DIR "/sachs_cd3cd28_aktinhib.csv"));
  auto dag = load_dag_json(VINESEM_DATA_DIR "/consent_dag.json");

  lgbn_reproduction(data, dag);

  auto t0 = std::chrono::steady_clock::now();
  auto gauss = fit_sem(data, dag);
  double gauss_secs = seconds_since(t0);
  gaussian_sem_check(gauss, gauss_secs, data, dag);

  SemConfig cfg;
  cfg.copulas = "pnp";
  cfg.margins = MarginKind::kde;
  auto kde_pnp = fit_sem(data, dag, cfg);
  cfg.margins = MarginKind::mixture;
  auto mix_pnp = fit_sem(data, dag, cfg);
  pruning_check(kde_pnp, mix_pnp, dag);

  order_check(gauss);
  margin_check(data, dag);
  copula_suite();
  gaussian_oracle();
  auto lgbn = fit_lgbn(data, dag);
  simulation_suite({ { "gaussian", &gauss }, { "kde-pnp", &kde_pnp }, { "mixture-pnp", &mix_pnp } }, lgbn, data,
                   dag);
  median_path_check(gauss, data);

  double kde_total = copulas_gof_table(kde_pnp, data).total.loglik;
  double mix_total = copulas_gof_table(mix_pnp, data).total.loglik;
  note("pnp copula totals within 10%",
       std::abs(kde_total / 2316.23 - 1) <= 0.10 && std::abs(mix_total / 2292.34 - 1) <= 0.10,
       "kde " + fmt("%.2f", kde_total) + " vs 2316.23 (" + fmt("%+.1f", 100 * (kde_total / 2316.23 - 1)) +
         "%), mixture " + fmt("%.2f", mix_total) + " vs 2292.34 (" + fmt("%+.1f", 100 * (mix_total / 2292.34 - 1)) +
         "%)");

  std::printf("%d failing\n", failures);
  return failures == 0 ? 0 : 1;
}
