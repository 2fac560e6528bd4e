#include "vinesem/gaussian_bn.hpp"

namespace vinesem {

const LgbnNode&
LgbnModel::node(const std::string& name) const
{
  auto it = nodes.find(name);
  if (it == nodes.end())
    throw UsageError("LGBN has no node '" + name + "'");
  return it->second;
}

LgbnModel
fit_lgbn(const Dataset& data, const DagSpec& dag)
{
  for (const auto& n : dag.nodes)
    data.index_of(n);
  LgbnModel model;
  model.dag = dag;
  model.order = topo_sort(dag);
  model.n = data.rows();
  const double n = static_cast<double>(data.rows());

  for (const auto& name : dag.nodes) {
    LgbnNode nd;
    nd.node = name;
    nd.parents = dag.parents(name);
    const auto p = static_cast<Eigen::Index>(nd.parents.size());
    if (data.rows() <= p + 1)
      throw InsufficientDataError("fit_lgbn: node '" + name + "' has " + std::to_string(p) +
                                  " parents but only " + std::to_string(data.rows()) + " rows");
    Eigen::MatrixXd x(data.rows(), p + 1);
    x.col(0).setOnes();
    for (Eigen::Index k = 0; k < p; ++k)
      x.col(k + 1) = data.column(nd.parents[static_cast<size_t>(k)]);
    Eigen::VectorXd y = data.column(name);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < p + 1)
      throw DegenerateDataError("fit_lgbn: parents of '" + name + "' are collinear (rank " +
                                std::to_string(qr.rank()) + " < " + std::to_string(p + 1) + ")");
    Eigen::VectorXd coef = qr.solve(y);
    nd.intercept = coef(0);
    nd.beta = coef.tail(p);
    double rss = (y - x * coef).squaredNorm();
    nd.sigma = std::sqrt(rss / n);
    if (!(nd.sigma > 0.0))
      throw DegenerateDataError("fit_lgbn: node '" + name + "' is an exact linear function of its parents");
    nd.loglik = -0.5 * n * (2.0 * kLogSqrt2Pi + std::log(nd.sigma * nd.sigma) + 1.0);
    model.nodes[name] = std::move(nd);
  }
  return model;
}

std::pair<double, double>
lgbn_cond_params(const LgbnModel& model, const std::string& node, const std::map<std::string, double>& parents)
{
  const auto& nd = model.node(node);
  double mean = nd.intercept;
  for (size_t k = 0; k < nd.parents.size(); ++k) {
    auto it = parents.find(nd.parents[k]);
    if (it == parents.end())
      throw UsageError("LGBN node '" + node + "': missing value of parent '" + nd.parents[k] + "'");
    mean += nd.beta(static_cast<Eigen::Index>(k)) * it->second;
  }
  return { mean, nd.sigma };
}

double
lgbn_logdensity(const LgbnModel& model, const std::map<std::string, double>& x)
{
  double total = 0.0;
  for (const auto& name : model.order) {
    auto it = x.find(name);
    if (it == x.end())
      throw UsageError("lgbn_logdensity: no value for node '" + name + "'");
    auto [mu, sd] = lgbn_cond_params(model, name, x);
    total += normal_logpdf((it->second - mu) / sd) - std::log(sd);
  }
  return total;
}

namespace {

// X = b + A^T X + e  =>  X = (I - A^T)^{-1} (b + e), A(i, j) = coefficient of i in j
Eigen::MatrixXd
reduced_form(const LgbnModel& model)
{
  const auto& names = model.dag.nodes;
  const auto p = static_cast<Eigen::Index>(names.size());
  auto idx = [&](const std::string& s) {
    return static_cast<Eigen::Index>(std::find(names.begin(), names.end(), s) - names.begin());
  };
  Eigen::MatrixXd at = Eigen::MatrixXd::Zero(p, p);
  for (const auto& [name, nd] : model.nodes)
    for (size_t k = 0; k < nd.parents.size(); ++k)
      at(idx(name), idx(nd.parents[k])) = nd.beta(static_cast<Eigen::Index>(k));
  return (Eigen::MatrixXd::Identity(p, p) - at).inverse();
}

} // namespace

Eigen::VectorXd
lgbn_implied_mean(const LgbnModel& model)
{
  Eigen::VectorXd b(static_cast<Eigen::Index>(model.dag.nodes.size()));
  for (size_t k = 0; k < model.dag.nodes.size(); ++k)
    b(static_cast<Eigen::Index>(k)) = model.node(model.dag.nodes[k]).intercept;
  return reduced_form(model) * b;
}

Eigen::MatrixXd
lgbn_implied_cov(const LgbnModel& model)
{
  Eigen::VectorXd omega(static_cast<Eigen::Index>(model.dag.nodes.size()));
  for (size_t k = 0; k < model.dag.nodes.size(); ++k)
    omega(static_cast<Eigen::Index>(k)) = std::pow(model.node(model.dag.nodes[k]).sigma, 2);
  Eigen::MatrixXd r = reduced_form(model);
  return r * omega.asDiagonal() * r.transpose();
}

GofTable
lgbn_gof_table(const LgbnModel& model)
{
  std::vector<NodeGof> rows;
  for (const auto& name : model.order) {
    const auto& nd = model.node(name);
    rows.push_back({ name, nd.loglik, 0.0, 0.0, nd.edf() });
  }
  return make_gof_table(std::move(rows), model.n);
}

void
to_json(nlohmann::json& j, const LgbnModel& m)
{
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& name : m.dag.nodes) {
    const auto& nd = m.node(name);
    nodes[name] = { { "parents", nd.parents },
                    { "intercept", nd.intercept },
                    { "beta", std::vector<double>(nd.beta.data(), nd.beta.data() + nd.beta.size()) },
                    { "sigma", nd.sigma },
                    { "loglik", nd.loglik } };
  }
  j = { { "kind", "lgbn" }, { "dag", dag_to_json(m.dag) }, { "n", m.n }, { "nodes", nodes } };
}

void
from_json(const nlohmann::json& j, LgbnModel& m)
{
  if (j.value("kind", std::string()) != "lgbn")
    throw UsageError("model JSON: field 'kind' must be \"lgbn\"");
  m.dag = dag_from_json(j.at("dag"), "model JSON field 'dag'");
  m.order = topo_sort(m.dag);
  m.n = j.at("n").get<Eigen::Index>();
  m.nodes.clear();
  for (const auto& name : m.dag.nodes) {
    const auto& e = j.at("nodes").at(name);
    LgbnNode nd;
    nd.node = name;
    nd.parents = e.at("parents").get<std::vector<std::string>>();
    if (nd.parents != m.dag.parents(name))
      throw UsageError("model JSON: parents of '" + name + "' do not match the dag");
    nd.intercept = e.at("intercept").get<double>();
    auto beta = e.at("beta").get<std::vector<double>>();
    nd.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    if (nd.beta.size() != static_cast<Eigen::Index>(nd.parents.size()))
      throw UsageError("model JSON: 'beta' of '" + name + "' has the wrong length");
    nd.sigma = e.at("sigma").get<double>();
    if (!(nd.sigma > 0.0))
      throw UsageError("model JSON: 'sigma' of '" + name + "' must be positive");
    nd.loglik = e.value("loglik", 0.0);
    m.nodes[name] = std::move(nd);
  }
}

} // namespace vinesem
