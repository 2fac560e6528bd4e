#pragma once

#include "vinesem/dvine_reg.hpp"
#include "vinesem/io.hpp"
#include "vinesem/margins.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace vinesem {

using Edge = std::pair<std::string, std::string>; // (parent, child)

struct DagSpec
{
  std::vector<std::string> nodes;
  std::vector<Edge> edges;

  //! Parents of `node` in edge-list order.
  std::vector<std::string> parents(const std::string& node) const;
  bool has_node(const std::string& node) const;
};

//! Validates names, self-loops, duplicates and acyclicity.
DagSpec
load_dag(std::vector<std::string> nodes, std::vector<Edge> edges);

DagSpec
load_dag_json(const std::string& path);

DagSpec
dag_from_json(const nlohmann::json& j, const std::string& source = "<json>");

nlohmann::json
dag_to_json(const DagSpec& dag);

//! Kahn's algorithm; ready nodes leave in declaration order. Throws CycleError.
std::vector<std::string>
topo_sort(const DagSpec& dag);

struct SemConfig
{
  MarginKind margins{ MarginKind::gaussian };
  std::string copulas{ "gaussian" }; // gaussian | parametric | pnp
  VineCriterion criterion{ VineCriterion::caic };
  SelectionCriterion pair_criterion{ SelectionCriterion::aic };
  MarginOptions margin_options;
  int threads{ 1 };

  CopulaConfig copula_config() const { return { family_set(copulas), pair_criterion }; }
};

struct SemModel
{
  DagSpec dag;
  std::vector<std::string> order;
  std::map<std::string, MarginModel> margins;
  std::map<std::string, DVineRegModel> vines; // every node, empty for roots
  SemConfig config;
  Dataset data; // training data restricted to the dag nodes

  const MarginModel& margin(const std::string& node) const;
  const DVineRegModel& vine(const std::string& node) const;
};

SemModel
fit_sem(const Dataset& data, const DagSpec& dag, const SemConfig& config = {});

//! DAG edges whose parent was not selected into the child's D-vine.
std::vector<Edge>
pruned_edges(const SemModel& model);

//! Log joint density at one point. `clamped` receives how many PIT values hit the clamp.
double
joint_logdensity(const SemModel& model, const std::map<std::string, double>& x, int* clamped = nullptr);

struct NodeGof
{
  std::string node;
  double loglik;
  double aic;
  double bic;
  double edf;
};

struct GofTable
{
  std::vector<NodeGof> rows; // topological order
  NodeGof total;
};

GofTable
make_gof_table(std::vector<NodeGof> rows, Eigen::Index n);

//! Original-scale fit per node: copula cll plus margin loglik.
GofTable
gof_table(const SemModel& model, const Dataset& data);

//! Margin-only part (kde margins use leave-one-out).
GofTable
margins_gof_table(const SemModel& model, const Dataset& data);

//! Copula-only part: cll and copula edf per non-root node.
GofTable
copulas_gof_table(const SemModel& model, const Dataset& data);

void
write_gof_csv(std::ostream& out, const GofTable& table);

void
to_json(nlohmann::json& j, const SemConfig& c);

void
from_json(const nlohmann::json& j, SemConfig& c);

void
to_json(nlohmann::json& j, const SemModel& m);

void
from_json(const nlohmann::json& j, SemModel& m);

} // namespace vinesem
