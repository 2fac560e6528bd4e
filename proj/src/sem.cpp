#include "vinesem/sem.hpp"
#include "vinesem/parallel.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <ostream>
#include <set>

namespace vinesem {

std::vector<std::string>
DagSpec::parents(const std::string& node) const
{
  std::vector<std::string> out;
  for (const auto& [p, c] : edges)
    if (c == node)
      out.push_back(p);
  return out;
}

bool
DagSpec::has_node(const std::string& node) const
{
  return std::find(nodes.begin(), nodes.end(), node) != nodes.end();
}

DagSpec
load_dag(std::vector<std::string> nodes, std::vector<Edge> edges)
{
  std::set<std::string> seen;
  for (const auto& n : nodes)
    if (!seen.insert(n).second)
      throw UsageError("dag: node '" + n + "' declared twice");
  std::set<Edge> seen_edges;
  for (const auto& e : edges) {
    for (const auto& end : { e.first, e.second })
      if (!seen.count(end))
        throw UsageError("dag: edge " + e.first + " -> " + e.second + " uses unknown node '" + end + "'");
    if (e.first == e.second)
      throw UsageError("dag: self-loop on '" + e.first + "'");
    if (!seen_edges.insert(e).second)
      throw UsageError("dag: duplicate edge " + e.first + " -> " + e.second);
  }
  DagSpec dag{ std::move(nodes), std::move(edges) };
  topo_sort(dag);
  return dag;
}

DagSpec
dag_from_json(const nlohmann::json& j, const std::string& source)
{
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
    throw UsageError(source + ": expected an object with 'nodes' and 'edges'");
  std::vector<std::string> nodes;
  for (const auto& n : j.at("nodes")) {
    if (!n.is_string())
      throw UsageError(source + ": field 'nodes' must hold strings");
    nodes.push_back(n.get<std::string>());
  }
  std::vector<Edge> edges;
  for (size_t i = 0; i < j.at("edges").size(); ++i) {
    const auto& e = j.at("edges")[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
      throw UsageError(source + ": field 'edges[" + std::to_string(i) +
                       "]' must be a [parent, child] pair of names");
    edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
  }
  return load_dag(std::move(nodes), std::move(edges));
}

DagSpec
load_dag_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open dag file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path + ": malformed JSON: " + e.what());
  }
  return dag_from_json(j, path);
}

nlohmann::json
dag_to_json(const DagSpec& dag)
{
  auto edges = nlohmann::json::array();
  for (const auto& [p, c] : dag.edges)
    edges.push_back({ p, c });
  return { { "nodes", dag.nodes }, { "edges", edges } };
}

std::vector<std::string>
topo_sort(const DagSpec& dag)
{
  std::map<std::string, int> indegree;
  for (const auto& n : dag.nodes)
    indegree[n] = 0;
  for (const auto& e : dag.edges)
    ++indegree[e.second];
  std::vector<std::string> order;
  std::vector<bool> done(dag.nodes.size(), false);
  while (order.size() < dag.nodes.size()) {
    size_t pick = dag.nodes.size();
    for (size_t i = 0; i < dag.nodes.size(); ++i)
      if (!done[i] && indegree[dag.nodes[i]] == 0) {
        pick = i;
        break;
      }
    if (pick == dag.nodes.size()) {
      // every remaining node has a remaining parent; name an edge between two of them
      for (const auto& [p, c] : dag.edges) {
        auto ip = std::find(dag.nodes.begin(), dag.nodes.end(), p) - dag.nodes.begin();
        auto ic = std::find(dag.nodes.begin(), dag.nodes.end(), c) - dag.nodes.begin();
        if (!done[ip] && !done[ic])
          throw CycleError("dag has a cycle through edge " + p + " -> " + c);
      }
      throw CycleError("dag has a cycle");
    }
    done[pick] = true;
    order.push_back(dag.nodes[pick]);
    for (const auto& e : dag.edges)
      if (e.first == dag.nodes[pick])
        --indegree[e.second];
  }
  return order;
}

const MarginModel&
SemModel::margin(const std::string& node) const
{
  auto it = margins.find(node);
  if (it == margins.end())
    throw UsageError("model has no node '" + node + "'");
  return it->second;
}

const DVineRegModel&
SemModel::vine(const std::string& node) const
{
  auto it = vines.find(node);
  if (it == vines.end())
    throw UsageError("model has no node '" + node + "'");
  return it->second;
}

SemModel
fit_sem(const Dataset& data, const DagSpec& dag, const SemConfig& config)
{
  for (const auto& n : dag.nodes)
    data.index_of(n);
  if (data.rows() < 30)
    throw UsageError("fit_sem: need at least 30 observations, got " + std::to_string(data.rows()));

  SemModel model;
  model.dag = dag;
  model.order = topo_sort(dag);
  model.config = config;
  model.data.names = dag.nodes;
  model.data.values.resize(data.rows(), static_cast<Eigen::Index>(dag.nodes.size()));
  for (size_t k = 0; k < dag.nodes.size(); ++k)
    model.data.values.col(static_cast<Eigen::Index>(k)) = data.column(dag.nodes[k]);

  const size_t p = dag.nodes.size();
  std::vector<MarginModel> margins(p);
  std::vector<Eigen::VectorXd> u(p);
  parallel_for(p, config.threads, [&](size_t k) {
    auto x = model.data.values.col(static_cast<Eigen::Index>(k));
    margins[k] = fit_margin(x, config.margins, config.margin_options);
    u[k] = margins[k].pit(x);
  });
  for (size_t k = 0; k < p; ++k)
    model.margins[dag.nodes[k]] = std::move(margins[k]);

  auto column_of = [&](const std::string& name) -> const Eigen::VectorXd& {
    return u[static_cast<size_t>(model.data.index_of(name))];
  };
  const CopulaConfig cc = config.copula_config();
  std::vector<DVineRegModel> vines(p);
  parallel_for(p, config.threads, [&](size_t k) {
    const auto& node = dag.nodes[k];
    NamedColumns cands;
    for (const auto& par : dag.parents(node))
      cands.emplace_back(par, column_of(par));
    if (cands.empty())
      vines[k] = DVineRegModel(node, {}, {}, config.criterion);
    else
      vines[k] = fit_dvine_reg(u[k], cands, config.criterion, cc, node);
  });
  for (size_t k = 0; k < p; ++k)
    model.vines[dag.nodes[k]] = std::move(vines[k]);
  return model;
}

std::vector<Edge>
pruned_edges(const SemModel& model)
{
  std::vector<Edge> out;
  for (const auto& e : model.dag.edges) {
    const auto& order = model.vine(e.second).order();
    if (std::find(order.begin(), order.end(), e.first) == order.end())
      out.push_back(e);
  }
  return out;
}

double
joint_logdensity(const SemModel& model, const std::map<std::string, double>& x, int* clamped)
{
  UnitValues u;
  int clamps = 0;
  for (const auto& node : model.dag.nodes) {
    auto it = x.find(node);
    if (it == x.end())
      throw UsageError("joint_logdensity: no value for node '" + node + "'");
    double c = model.margin(node).cdf(it->second);
    if (!(c > kEps && c < 1.0 - kEps))
      ++clamps;
    u[node] = clamp_unit(c);
  }
  if (clamps > 0)
    spdlog::warn("joint_logdensity: {} PIT value(s) clamped to [{}, 1 - {}]", clamps, kEps, kEps);
  if (clamped)
    *clamped = clamps;

  double total = 0.0;
  for (const auto& node : model.order) {
    total += model.margin(node).log_pdf(x.at(node));
    const auto& vine = model.vine(node);
    if (vine.size() > 0)
      total += vine.cond_log_copula(u.at(node), u);
  }
  return total;
}

GofTable
make_gof_table(std::vector<NodeGof> rows, Eigen::Index n)
{
  GofTable t;
  t.total = { "total", 0.0, 0.0, 0.0, 0.0 };
  const double logn = std::log(static_cast<double>(n));
  for (auto& r : rows) {
    r.aic = -2.0 * r.loglik + 2.0 * r.edf;
    r.bic = -2.0 * r.loglik + logn * r.edf;
    t.total.loglik += r.loglik;
    t.total.aic += r.aic;
    t.total.bic += r.bic;
    t.total.edf += r.edf;
  }
  t.rows = std::move(rows);
  return t;
}

namespace {

NamedColumns
unit_columns(const SemModel& model, const Dataset& data)
{
  NamedColumns out;
  for (const auto& node : model.dag.nodes)
    out.emplace_back(node, model.margin(node).pit(data.column(node)));
  return out;
}

const Eigen::VectorXd&
find_column(const NamedColumns& cols, const std::string& name)
{
  for (const auto& [n, c] : cols)
    if (n == name)
      return c;
  throw UsageError("no column '" + name + "'");
}

} // namespace

GofTable
margins_gof_table(const SemModel& model, const Dataset& data)
{
  std::vector<NodeGof> rows;
  for (const auto& node : model.order) {
    auto g = margin_gof(model.margin(node), data.column(node));
    rows.push_back({ node, g.loglik, 0.0, 0.0, g.edf });
  }
  return make_gof_table(std::move(rows), data.rows());
}

GofTable
copulas_gof_table(const SemModel& model, const Dataset& data)
{
  auto cols = unit_columns(model, data);
  std::vector<NodeGof> rows;
  for (const auto& node : model.order) {
    const auto& vine = model.vine(node);
    if (model.dag.parents(node).empty())
      continue;
    double c = vine.size() > 0 ? cll(vine, find_column(cols, node), cols) : 0.0;
    rows.push_back({ node, c, 0.0, 0.0, vine.edf() });
  }
  return make_gof_table(std::move(rows), data.rows());
}

GofTable
gof_table(const SemModel& model, const Dataset& data)
{
  auto m = margins_gof_table(model, data);
  auto c = copulas_gof_table(model, data);
  std::map<std::string, NodeGof> cop;
  for (const auto& r : c.rows)
    cop[r.node] = r;
  std::vector<NodeGof> rows;
  for (auto r : m.rows) {
    if (auto it = cop.find(r.node); it != cop.end()) {
      r.loglik += it->second.loglik;
      r.edf += it->second.edf;
    }
    rows.push_back(r);
  }
  return make_gof_table(std::move(rows), data.rows());
}

void
write_gof_csv(std::ostream& out, const GofTable& table)
{
  out << "node,loglik,aic,bic,edf\n";
  for (const auto& r : table.rows)
    out << r.node << ',' << fmt6(r.loglik) << ',' << fmt6(r.aic) << ',' << fmt6(r.bic) << ','
        << fmt6(r.edf) << '\n';
  const auto& t = table.total;
  out << t.node << ',' << fmt6(t.loglik) << ',' << fmt6(t.aic) << ',' << fmt6(t.bic) << ','
      << fmt6(t.edf) << '\n';
}

void
to_json(nlohmann::json& j, const SemConfig& c)
{
  j = { { "margins", to_string(c.margins) },
        { "copulas", c.copulas },
        { "criterion", to_string(c.criterion) },
        { "pair_criterion", to_string(c.pair_criterion) },
        { "kmax", c.margin_options.kmax },
        { "restarts", c.margin_options.restarts },
        { "seed", c.margin_options.seed } };
}

void
from_json(const nlohmann::json& j, SemConfig& c)
{
  c.margins = margin_kind_from_string(j.at("margins").get<std::string>());
  c.copulas = j.at("copulas").get<std::string>();
  family_set(c.copulas);
  c.criterion = vine_criterion_from_string(j.at("criterion").get<std::string>());
  c.pair_criterion = criterion_from_string(j.value("pair_criterion", std::string("aic")));
  c.margin_options.kmax = j.value("kmax", c.margin_options.kmax);
  c.margin_options.restarts = j.value("restarts", c.margin_options.restarts);
  c.margin_options.seed = j.value("seed", c.margin_options.seed);
}

void
to_json(nlohmann::json& j, const SemModel& m)
{
  nlohmann::json margins = nlohmann::json::object(), vines = nlohmann::json::object();
  for (const auto& node : m.dag.nodes) {
    margins[node] = m.margin(node);
    vines[node] = m.vine(node);
  }
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.data.rows(); ++i) {
    auto r = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.data.values.cols(); ++k)
      r.push_back(m.data.values(i, k));
    rows.push_back(std::move(r));
  }
  j = { { "kind", "dvine_sem" },
        { "dag", dag_to_json(m.dag) },
        { "order", m.order },
        { "config", m.config },
        { "margins", margins },
        { "vines", vines },
        { "data", { { "names", m.data.names }, { "rows", rows } } } };
}

void
from_json(const nlohmann::json& j, SemModel& m)
{
  if (j.value("kind", std::string()) != "dvine_sem")
    throw UsageError("model JSON: field 'kind' must be \"dvine_sem\"");
  m.dag = dag_from_json(j.at("dag"), "model JSON field 'dag'");
  m.order = topo_sort(m.dag);
  m.config = j.at("config").get<SemConfig>();
  m.margins.clear();
  m.vines.clear();
  for (const auto& node : m.dag.nodes) {
    if (!j.at("margins").contains(node) || !j.at("vines").contains(node))
      throw UsageError("model JSON: no margin or D-vine for node '" + node + "'");
    m.margins[node] = j.at("margins").at(node).get<MarginModel>();
    m.vines[node] = j.at("vines").at(node).get<DVineRegModel>();
    auto parents = m.dag.parents(node);
    for (const auto& sel : m.vines[node].order())
      if (std::find(parents.begin(), parents.end(), sel) == parents.end())
        throw UsageError("model JSON: D-vine of '" + node + "' uses '" + sel +
                         "', which is not a dag parent");
  }
  const auto& d = j.at("data");
  m.data.names = d.at("names").get<std::vector<std::string>>();
  const auto& rows = d.at("rows");
  m.data.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.data.names.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t k = 0; k < m.data.names.size(); ++k)
      m.data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i].at(k).get<double>();
}

} // namespace vinesem
