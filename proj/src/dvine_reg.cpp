#include "vinesem/dvine_reg.hpp"

namespace vinesem {

namespace {

double
penalized(VineCriterion c, double cll, double edf, Eigen::Index n)
{
  switch (c) {
    case VineCriterion::cll:
      return -cll;
    case VineCriterion::caic:
      return -2.0 * cll + 2.0 * edf;
    case VineCriterion::cbic:
      return -2.0 * cll + std::log(static_cast<double>(n)) * edf;
  }
  return -cll;
}

void
check_unit(const Eigen::VectorXd& v, const std::string& what)
{
  if (!((v.array() > 0.0).all() && (v.array() < 1.0).all()))
    throw UsageError("fit_dvine_reg: " + what + " has values outside (0, 1)");
}

Eigen::VectorXd
hvec(const PairCopula& pc, HDir dir, const Eigen::VectorXd& u, const Eigen::VectorXd& v)
{
  return hfunc(pc, dir, PseudoObs(u, v));
}

// new edges (t, m - t) for t = 0..m when a covariate joins the end of the path
struct Extension
{
  std::vector<PairCopula> pairs;
  std::vector<Eigen::VectorXd> left;
  std::vector<Eigen::VectorXd> right;
};

} // namespace

std::string
to_string(VineCriterion c)
{
  switch (c) {
    case VineCriterion::cll:
      return "cll";
    case VineCriterion::caic:
      return "caic";
    case VineCriterion::cbic:
      return "cbic";
  }
  return "";
}

VineCriterion
vine_criterion_from_string(const std::string& name)
{
  if (name == "cll")
    return VineCriterion::cll;
  if (name == "caic")
    return VineCriterion::caic;
  if (name == "cbic")
    return VineCriterion::cbic;
  throw UsageError("unknown criterion '" + name + "' (expected cll|caic|cbic)");
}

DVineRegModel::DVineRegModel(std::string response,
                             std::vector<std::string> order,
                             std::vector<std::vector<PairCopula>> pairs,
                             VineCriterion criterion)
  : response_(std::move(response))
  , order_(std::move(order))
  , pairs_(std::move(pairs))
  , criterion_(criterion)
{
  const size_t m = order_.size();
  if (pairs_.size() != m)
    throw UsageError("DVineRegModel: expected " + std::to_string(m) + " trees");
  for (size_t t = 0; t < m; ++t)
    if (pairs_[t].size() != m - t)
      throw UsageError("DVineRegModel: tree " + std::to_string(t + 1) + " must hold " +
                       std::to_string(m - t) + " pairs");
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < i; ++j)
      if (order_[i] == order_[j])
        throw UsageError("DVineRegModel: covariate '" + order_[i] + "' listed twice");
}

double
DVineRegModel::edf() const
{
  double e = 0.0;
  for (const auto& row : pairs_)
    e += row.front().edf;
  return e;
}

std::vector<double>
DVineRegModel::ordered(const UnitValues& x_u) const
{
  std::vector<double> xs;
  xs.reserve(order_.size());
  for (const auto& name : order_) {
    auto it = x_u.find(name);
    if (it == x_u.end())
      throw UsageError("D-vine for '" + response_ + "': missing value of covariate '" + name + "'");
    xs.push_back(clamp_unit(it->second));
  }
  return xs;
}

std::vector<double>
DVineRegModel::conditioners(const std::vector<double>& xs) const
{
  const size_t m = xs.size();
  std::vector<double> out;
  if (m == 0)
    return out;
  out.reserve(m);
  out.push_back(xs[0]);
  // left/right arguments of tree t at edge a >= 1 (index 0 unused)
  std::vector<double> left(m), right(m);
  for (size_t a = 1; a < m; ++a) {
    left[a] = xs[a - 1];
    right[a] = xs[a];
  }
  for (size_t t = 0; t + 1 < m; ++t) {
    const auto& row = pairs_[t];
    const size_t edges = m - t;
    out.push_back(hfunc(row[1], HDir::given_first, left[1], right[1]));
    std::vector<double> nl(m), nr(m);
    for (size_t a = 1; a + 1 < edges; ++a) {
      nl[a] = hfunc(row[a], HDir::given_second, left[a], right[a]);
      nr[a] = hfunc(row[a + 1], HDir::given_first, left[a + 1], right[a + 1]);
    }
    left = std::move(nl);
    right = std::move(nr);
  }
  return out;
}

double
DVineRegModel::cond_cdf(double y_u, const UnitValues& x_u) const
{
  auto r = conditioners(ordered(x_u));
  double l = clamp_unit(y_u);
  for (size_t t = 0; t < r.size(); ++t)
    l = hfunc(pairs_[t][0], HDir::given_second, l, r[t]);
  return clamp_unit(l);
}

double
DVineRegModel::cond_quantile(double alpha, const UnitValues& x_u) const
{
  if (!(alpha > 0.0 && alpha < 1.0))
    throw UsageError("cond_quantile: alpha must lie in (0, 1)");
  auto r = conditioners(ordered(x_u));
  double p = alpha;
  for (size_t t = r.size(); t-- > 0;)
    p = hinv(pairs_[t][0], HDir::given_second, p, r[t]);
  return clamp_unit(p);
}

double
DVineRegModel::cond_log_copula(double y_u, const UnitValues& x_u) const
{
  auto r = conditioners(ordered(x_u));
  double l = clamp_unit(y_u), s = 0.0;
  for (size_t t = 0; t < r.size(); ++t) {
    s += copula_log_pdf(pairs_[t][0], l, r[t]);
    l = hfunc(pairs_[t][0], HDir::given_second, l, r[t]);
  }
  return s;
}

double
DVineRegModel::cond_pdf(double y_u, const UnitValues& x_u, double margin_density_at_y) const
{
  return std::exp(cond_log_copula(y_u, x_u)) * margin_density_at_y;
}

DVineRegModel
fit_dvine_reg(const Eigen::VectorXd& resp_u,
              const NamedColumns& cand_u,
              VineCriterion criterion,
              const CopulaConfig& config,
              const std::string& response)
{
  const Eigen::Index n = resp_u.size();
  if (n < 30)
    throw UsageError("fit_dvine_reg: need at least 30 observations");
  check_unit(resp_u, "response");
  for (const auto& [name, col] : cand_u) {
    if (col.size() != n)
      throw UsageError("fit_dvine_reg: candidate '" + name + "' has " + std::to_string(col.size()) +
                       " values, response has " + std::to_string(n));
    check_unit(col, "candidate '" + name + "'");
    if (name == response)
      throw UsageError("fit_dvine_reg: response listed as its own candidate");
  }

  DVineRegModel model;
  model.response_ = response;
  model.criterion_ = criterion;

  // training-data arguments of every edge: left[t][a], right[t][a]
  std::vector<std::vector<Eigen::VectorXd>> left, right;
  std::vector<Eigen::VectorXd> path{ resp_u };
  std::vector<bool> used(cand_u.size(), false);
  double cur_cll = 0.0, cur_edf = 0.0;
  double cur_score = penalized(criterion, 0.0, 0.0, n);

  for (;;) {
    const size_t m = model.order_.size();
    // h2 of the last edge in each old tree feeds the new edge one tree up
    std::vector<Eigen::VectorXd> carried(m + 1);
    carried[0] = path[m];
    for (size_t t = 1; t <= m; ++t)
      carried[t] = hvec(model.pairs_[t - 1][m - t], HDir::given_second, left[t - 1][m - t],
                        right[t - 1][m - t]);

    int best = -1;
    double best_score = std::numeric_limits<double>::infinity();
    Extension best_ext;
    for (size_t c = 0; c < cand_u.size(); ++c) {
      if (used[c])
        continue;
      Extension ext;
      for (size_t t = 0; t <= m; ++t) {
        Eigen::VectorXd l = carried[t];
        Eigen::VectorXd r = t == 0 ? cand_u[c].second
                                   : hvec(ext.pairs[t - 1], HDir::given_first, ext.left[t - 1],
                                          ext.right[t - 1]);
        ext.pairs.push_back(select_pair_family(PseudoObs(l, r), config.families,
                                               config.pair_criterion));
        ext.left.push_back(std::move(l));
        ext.right.push_back(std::move(r));
      }
      const PairCopula& top = ext.pairs.back();
      double s = penalized(criterion, cur_cll + top.loglik, cur_edf + top.edf, n);
      if (s < best_score) {
        best_score = s;
        best = static_cast<int>(c);
        best_ext = std::move(ext);
      }
    }
    if (best < 0 || !(best_score < cur_score))
      break;

    used[static_cast<size_t>(best)] = true;
    model.order_.push_back(cand_u[static_cast<size_t>(best)].first);
    path.push_back(cand_u[static_cast<size_t>(best)].second);
    model.pairs_.emplace_back();
    left.emplace_back();
    right.emplace_back();
    for (size_t t = 0; t <= m; ++t) {
      model.pairs_[t].push_back(std::move(best_ext.pairs[t]));
      left[t].push_back(std::move(best_ext.left[t]));
      right[t].push_back(std::move(best_ext.right[t]));
    }
    const PairCopula& top = model.pairs_[m][0];
    cur_cll += top.loglik;
    cur_edf += top.edf;
    cur_score = best_score;
    model.trace_.push_back({ model.order_.back(), best_score, cur_cll, cur_edf });
  }
  model.fit_cll_ = cur_cll;
  return model;
}

double
cll(const DVineRegModel& model, const Eigen::VectorXd& resp_u, const NamedColumns& x_u)
{
  const size_t m = model.size();
  std::vector<const Eigen::VectorXd*> cols;
  for (const auto& name : model.order()) {
    auto it = std::find_if(x_u.begin(), x_u.end(), [&](const auto& p) { return p.first == name; });
    if (it == x_u.end())
      throw UsageError("cll: missing covariate column '" + name + "'");
    if (it->second.size() != resp_u.size())
      throw UsageError("cll: column '" + name + "' has the wrong length");
    cols.push_back(&it->second);
  }
  double total = 0.0;
  UnitValues row;
  for (Eigen::Index i = 0; i < resp_u.size(); ++i) {
    for (size_t k = 0; k < m; ++k)
      row[model.order()[k]] = (*cols[k])(i);
    total += model.cond_log_copula(resp_u(i), row);
  }
  return total;
}

double
caic(const DVineRegModel& model, const Eigen::VectorXd& resp_u, const NamedColumns& x_u)
{
  return -2.0 * cll(model, resp_u, x_u) + 2.0 * model.edf();
}

double
cbic(const DVineRegModel& model, const Eigen::VectorXd& resp_u, const NamedColumns& x_u)
{
  return -2.0 * cll(model, resp_u, x_u) +
         std::log(static_cast<double>(resp_u.size())) * model.edf();
}

void
to_json(nlohmann::json& j, const DVineRegModel& m)
{
  auto trace = nlohmann::json::array();
  for (const auto& s : m.trace())
    trace.push_back(
      { { "covariate", s.covariate }, { "criterion", s.criterion }, { "cll", s.cll }, { "edf", s.edf } });
  j = nlohmann::json{ { "response", m.response() },
                      { "order", m.order() },
                      { "pairs", m.pairs() },
                      { "criterion", to_string(m.criterion()) },
                      { "fit_cll", m.fit_cll() },
                      { "trace", trace } };
}

void
from_json(const nlohmann::json& j, DVineRegModel& m)
{
  m = DVineRegModel(j.at("response").get<std::string>(),
                    j.at("order").get<std::vector<std::string>>(),
                    j.at("pairs").get<std::vector<std::vector<PairCopula>>>(),
                    vine_criterion_from_string(j.at("criterion").get<std::string>()));
  m.fit_cll_ = j.value("fit_cll", 0.0);
  for (const auto& s : j.value("trace", nlohmann::json::array()))
    m.trace_.push_back({ s.at("covariate").get<std::string>(), s.at("criterion").get<double>(),
                         s.at("cll").get<double>(), s.at("edf").get<double>() });
}

} // namespace vinesem
