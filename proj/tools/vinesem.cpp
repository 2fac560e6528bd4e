// vinesem: fit, report and sample D-vine copula SEMs on a known DAG.
#include "vinesem/rng.hpp"
#include "vinesem/simulate.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace vinesem;
namespace fs = std::filesystem;

namespace {

struct RunConfig
{
  std::string data;
  std::string dag;
  std::string margins{ "gaussian" };
  std::string copulas{ "gaussian" };
  std::string criterion{ "caic" };
  std::string out{ "." };
  std::string model;
  std::string cond_values;
  uint64_t seed{ 1 };
  Eigen::Index n{ 845 };
  double alpha{ 0.5 };
  bool log{ false };
  int threads{ 1 };
};

void
set_log_level()
{
  // diagnostics go to stderr, data files are the only output
  spdlog::set_default_logger(spdlog::stderr_logger_mt("vinesem"));
  const char* env = std::getenv("VINESEM_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  spdlog::set_pattern("vinesem: %l: %v");
}

Dataset
load_data(const RunConfig& rc)
{
  auto d = read_csv(rc.data);
  spdlog::info("read {} rows x {} columns from {}", d.rows(), d.names.size(), rc.data);
  return rc.log ? log_transform(std::move(d)) : d;
}

std::ofstream
open_out(const RunConfig& rc, const std::string& name)
{
  fs::create_directories(rc.out);
  auto path = fs::path(rc.out) / name;
  std::ofstream f(path);
  if (!f)
    throw UsageError("cannot write '" + path.string() + "'");
  return f;
}

nlohmann::json
load_model_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open model file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path + ": malformed JSON: " + e.what());
  }
}

std::string
edge_text(const Edge& e)
{
  return e.first + "->" + e.second;
}

void
cmd_fit(const RunConfig& rc)
{
  auto data = load_data(rc);
  auto dag = load_dag_json(rc.dag);
  SemConfig cfg;
  cfg.margins = margin_kind_from_string(rc.margins);
  family_set(rc.copulas);
  cfg.copulas = rc.copulas;
  cfg.criterion = vine_criterion_from_string(rc.criterion);
  cfg.threads = rc.threads;
  auto model = fit_sem(data, dag, cfg);
  spdlog::info("fitted {} nodes", model.order.size());

  open_out(rc, "model.json") << nlohmann::json(model).dump(1) << '\n';
  {
    auto f = open_out(rc, "margins_gof.csv");
    write_gof_csv(f, margins_gof_table(model, data));
  }
  {
    auto f = open_out(rc, "copulas_gof.csv");
    auto t = copulas_gof_table(model, data);
    f << "node,order,loglik,aic,bic,edf\n";
    for (const auto& r : t.rows) {
      std::string order;
      for (const auto& p : model.vine(r.node).order())
        order += (order.empty() ? "" : " ") + p;
      f << r.node << ',' << order << ',' << fmt6(r.loglik) << ',' << fmt6(r.aic) << ',' << fmt6(r.bic)
        << ',' << fmt6(r.edf) << '\n';
    }
    f << "total,," << fmt6(t.total.loglik) << ',' << fmt6(t.total.aic) << ',' << fmt6(t.total.bic) << ','
      << fmt6(t.total.edf) << '\n';
  }
  {
    auto f = open_out(rc, "sem_gof.csv");
    write_gof_csv(f, gof_table(model, data));
  }
  auto f = open_out(rc, "pruned_edges.txt");
  for (const auto& e : pruned_edges(model))
    f << edge_text(e) << '\n';
}

void
cmd_fit_lgbn(const RunConfig& rc)
{
  auto data = load_data(rc);
  auto model = fit_lgbn(data, load_dag_json(rc.dag));
  open_out(rc, "lgbn.json") << nlohmann::json(model).dump(1) << '\n';
  auto f = open_out(rc, "lgbn_gof.csv");
  write_gof_csv(f, lgbn_gof_table(model));
}

void
cmd_simulate(const RunConfig& rc)
{
  auto j = load_model_json(rc.model);
  SimConfig sim{ rc.n, rc.seed };
  Dataset out;
  if (j.value("kind", std::string()) == "lgbn")
    out = sample_lgbn(j.get<LgbnModel>(), sim);
  else
    out = sample_sem(j.get<SemModel>(), sim);
  {
    auto f = open_out(rc, "simulated.csv");
    write_csv(f, out);
  }
  auto now = std::chrono::system_clock::now().time_since_epoch();
  nlohmann::json side{ { "model", rc.model },
                       { "kind", j.value("kind", std::string()) },
                       { "n", rc.n },
                       { "seed", rc.seed },
                       { "config", j.value("config", nlohmann::json()) },
                       { "created_unix", std::chrono::duration_cast<std::chrono::seconds>(now).count() } };
  open_out(rc, "simulated.json") << side.dump(1) << '\n';
}

void
cmd_cond_sample(const RunConfig& rc)
{
  auto j = load_model_json(rc.model);
  const bool lgbn = j.value("kind", std::string()) == "lgbn";
  std::optional<LgbnModel> lg;
  std::optional<SemModel> sem;
  if (lgbn)
    lg = j.get<LgbnModel>();
  else
    sem = j.get<SemModel>();
  std::ifstream in(rc.cond_values);
  if (!in)
    throw UsageError("cannot open conditioning values '" + rc.cond_values + "'");
  // node,point,parent,value rows; groups keep file order
  std::vector<std::pair<std::string, std::string>> groups;
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> given;
  std::string line;
  std::getline(in, line);
  if (line.rfind("node,point,parent,value", 0) != 0)
    throw UsageError(rc.cond_values + ":1: expected header node,point,parent,value");
  for (size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty())
      continue;
    std::istringstream ls(line);
    std::string node, point, parent, value;
    std::getline(ls, node, ',');
    std::getline(ls, point, ',');
    std::getline(ls, parent, ',');
    std::getline(ls, value);
    double v;
    try {
      size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size() && value.find_first_not_of(" \r", used) != std::string::npos)
        throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw UsageError(rc.cond_values + ":" + std::to_string(lineno) + ": field 'value' is not a number");
    }
    auto key = std::make_pair(node, point);
    if (!given.count(key))
      groups.push_back(key);
    given[key][parent] = v;
  }

  auto samples = open_out(rc, "cond_samples.csv");
  auto density = open_out(rc, "cond_density.csv");
  samples << "node,point,value\n";
  density << "node,point,x,density\n";
  for (const auto& key : groups) {
    const auto& [node, point] = key;
    Eigen::VectorXd s(rc.n);
    if (lgbn) {
      auto [mu, sd] = lgbn_cond_params(*lg, node, given[key]);
      const auto& nodes = lg->dag.nodes;
      Rng rng(rc.seed, static_cast<uint64_t>(std::find(nodes.begin(), nodes.end(), node) - nodes.begin()));
      for (Eigen::Index i = 0; i < rc.n; ++i)
        s(i) = mu + sd * rng.normal();
    } else {
      s = sample_node_given_parents(*sem, node, given[key], rc.n, rc.seed);
    }
    for (Eigen::Index i = 0; i < s.size(); ++i)
      samples << node << ',' << point << ',' << fmt6(s(i)) << '\n';
    if (s.size() >= 20) {
      auto kde = fit_margin(s, MarginKind::kde);
      double lo = s.minCoeff() - 3 * kde.bandwidth(), hi = s.maxCoeff() + 3 * kde.bandwidth();
      for (int g = 0; g < 200; ++g) {
        double x = lo + (hi - lo) * g / 199.0;
        density << node << ',' << point << ',' << fmt6(x) << ',' << fmt6(kde.pdf(x)) << '\n';
      }
    }
  }
}

void
cmd_quantile_path(const RunConfig& rc)
{
  auto j = load_model_json(rc.model);
  if (j.value("kind", std::string()) != "dvine_sem")
    throw UsageError("quantile-path needs a D-vine SEM model (from 'vinesem fit')");
  auto path = cond_median_path(j.get<SemModel>(), rc.alpha);
  auto f = open_out(rc, "quantile_path.csv");
  f << "node,value\n";
  for (const auto& [node, v] : path)
    f << node << ',' << fmt6(v) << '\n';
}

void
cmd_joint_density(const RunConfig& rc)
{
  auto j = load_model_json(rc.model);
  auto data = load_data(rc);
  const bool lgbn = j.value("kind", std::string()) == "lgbn";
  auto f = open_out(rc, "joint_density.csv");
  f << "row,logdensity,clamped\n";
  if (lgbn) {
    auto m = j.get<LgbnModel>();
    for (const auto& node : m.dag.nodes)
      data.index_of(node);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      f << i + 1 << ',' << fmt6(lgbn_logdensity(m, data.row(i))) << ",0\n";
    return;
  }
  auto m = j.get<SemModel>();
  for (const auto& node : m.dag.nodes)
    data.index_of(node);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    int clamped = 0;
    double v = joint_logdensity(m, data.row(i), &clamped);
    f << i + 1 << ',' << fmt6(v) << ',' << clamped << '\n';
  }
}

} // namespace

int
main(int argc, char** argv)
{
  set_log_level();
  RunConfig rc;
  CLI::App app{ "Fit, report and sample D-vine copula SEMs on a known DAG" };
  app.require_subcommand(1);
  auto paths = [&](CLI::App* c, bool need_dag) {
    c->add_option("--data", rc.data, "CSV with a header row")->required()->check(CLI::ExistingFile);
    if (need_dag)
      c->add_option("--dag", rc.dag, "DAG JSON {nodes, edges}")->required()->check(CLI::ExistingFile);
    c->add_flag("--log", rc.log, "natural log of every column before use");
  };
  auto out = [&](CLI::App* c) { c->add_option("--out", rc.out, "output directory"); };
  auto model = [&](CLI::App* c) {
    c->add_option("--model", rc.model, "model JSON from a fit")->required()->check(CLI::ExistingFile);
  };

  auto fit = app.add_subcommand("fit", "fit a D-vine copula SEM");
  paths(fit, true);
  fit->add_option("--margins", rc.margins)->check(CLI::IsMember({ "gaussian", "mixture", "kde" }));
  fit->add_option("--copulas", rc.copulas)->check(CLI::IsMember({ "gaussian", "parametric", "pnp" }));
  fit->add_option("--criterion", rc.criterion)->check(CLI::IsMember({ "cll", "caic", "cbic" }));
  fit->add_option("--threads", rc.threads)->check(CLI::PositiveNumber);
  out(fit);

  auto lgbn = app.add_subcommand("fit-lgbn", "fit the linear Gaussian Bayesian network");
  paths(lgbn, true);
  out(lgbn);

  auto sim = app.add_subcommand("simulate", "forward-sample a fitted model");
  model(sim);
  sim->add_option("--n", rc.n)->check(CLI::PositiveNumber);
  sim->add_option("--seed", rc.seed);
  out(sim);

  auto cond = app.add_subcommand("cond-sample", "sample nodes given parent values");
  model(cond);
  cond->add_option("--cond-values", rc.cond_values, "CSV node,point,parent,value")
    ->required()
    ->check(CLI::ExistingFile);
  cond->add_option("--n", rc.n)->check(CLI::PositiveNumber);
  cond->add_option("--seed", rc.seed);
  out(cond);

  auto qp = app.add_subcommand("quantile-path", "conditional median path from a root quantile");
  model(qp);
  qp->add_option("--alpha", rc.alpha)->check(CLI::Range(0.0, 1.0));
  out(qp);

  auto jd = app.add_subcommand("joint-density", "log joint density of each data row");
  model(jd);
  paths(jd, false);
  out(jd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit)
      cmd_fit(rc);
    else if (*lgbn)
      cmd_fit_lgbn(rc);
    else if (*sim)
      cmd_simulate(rc);
    else if (*cond)
      cmd_cond_sample(rc);
    else if (*qp)
      cmd_quantile_path(rc);
    else if (*jd)
      cmd_joint_density(rc);
  } catch (const NumericError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("model JSON: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    // usage, input, cycle and data errors
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
