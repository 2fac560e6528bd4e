#include "vinesem/simulate.hpp"
#include "vinesem/rng.hpp"
#include "vinesem/stats.hpp"

namespace vinesem {

namespace {

void
check_n(Eigen::Index n)
{
  if (n < 1)
    throw UsageError("sample size must be at least 1");
}

uint64_t
stream_of(const DagSpec& dag, const std::string& node)
{
  return static_cast<uint64_t>(std::find(dag.nodes.begin(), dag.nodes.end(), node) - dag.nodes.begin());
}

} // namespace

Dataset
sample_sem(const SemModel& model, const SimConfig& config)
{
  check_n(config.n);
  const auto& nodes = model.dag.nodes;
  Dataset out;
  out.names = nodes;
  out.values.resize(config.n, static_cast<Eigen::Index>(nodes.size()));
  std::map<std::string, Eigen::VectorXd> u;
  for (const auto& node : model.order) {
    Rng rng(config.seed, stream_of(model.dag, node));
    const auto& vine = model.vine(node);
    const auto& margin = model.margin(node);
    Eigen::VectorXd un(config.n), xn(config.n);
    UnitValues given;
    for (Eigen::Index i = 0; i < config.n; ++i) {
      double w = rng.uniform();
      if (vine.size() > 0) {
        for (const auto& par : vine.order())
          given[par] = u.at(par)(i);
        w = vine.cond_quantile(w, given);
      }
      xn(i) = margin.pit_inv(w);
      un(i) = margin.pit(xn(i));
    }
    u[node] = std::move(un);
    out.values.col(out.index_of(node)) = xn;
  }
  return out;
}

Dataset
sample_lgbn(const LgbnModel& model, const SimConfig& config)
{
  check_n(config.n);
  const auto& nodes = model.dag.nodes;
  Dataset out;
  out.names = nodes;
  out.values.resize(config.n, static_cast<Eigen::Index>(nodes.size()));
  for (const auto& node : model.order) {
    Rng rng(config.seed, stream_of(model.dag, node));
    const auto& nd = model.node(node);
    Eigen::VectorXd mean = Eigen::VectorXd::Constant(config.n, nd.intercept);
    for (size_t k = 0; k < nd.parents.size(); ++k)
      mean += nd.beta(static_cast<Eigen::Index>(k)) * out.values.col(out.index_of(nd.parents[k]));
    for (Eigen::Index i = 0; i < config.n; ++i)
      out.values(i, out.index_of(node)) = mean(i) + nd.sigma * rng.normal();
  }
  return out;
}

Eigen::VectorXd
sample_node_given_parents(const SemModel& model,
                          const std::string& node,
                          const std::map<std::string, double>& parent_values,
                          Eigen::Index n,
                          uint64_t seed)
{
  check_n(n);
  const auto& vine = model.vine(node);
  const auto& margin = model.margin(node);
  UnitValues given;
  for (const auto& par : vine.order()) {
    auto it = parent_values.find(par);
    if (it == parent_values.end())
      throw UsageError("sample_node_given_parents: node '" + node + "' needs a value for parent '" +
                       par + "'");
    given[par] = model.margin(par).pit(it->second);
  }
  Rng rng(seed, stream_of(model.dag, node));
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double w = rng.uniform();
    if (vine.size() > 0)
      w = vine.cond_quantile(w, given);
    out(i) = margin.pit_inv(w);
  }
  return out;
}

std::vector<std::pair<std::string, double>>
cond_median_path(const SemModel& model, double alpha)
{
  if (!(alpha > 0.0 && alpha < 1.0))
    throw UsageError("alpha must lie in (0, 1)");
  std::vector<std::pair<std::string, double>> path;
  UnitValues u;
  for (const auto& node : model.order) {
    const auto& margin = model.margin(node);
    double x;
    if (model.dag.parents(node).empty())
      x = stats::quantile(model.data.column(node), alpha);
    else {
      const auto& vine = model.vine(node);
      x = margin.pit_inv(vine.size() > 0 ? vine.cond_quantile(0.5, u) : 0.5);
    }
    u[node] = margin.pit(x);
    path.emplace_back(node, x);
  }
  return path;
}

} // namespace vinesem
