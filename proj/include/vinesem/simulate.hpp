#pragma once

#include "vinesem/gaussian_bn.hpp"
#include "vinesem/sem.hpp"

#include <cstdint>

namespace vinesem {

struct SimConfig
{
  Eigen::Index n{ 845 };
  uint64_t seed{ 1 };
};

//! Forward sampling along the topological order; node k draws from stream k.
Dataset
sample_sem(const SemModel& model, const SimConfig& config);

Dataset
sample_lgbn(const LgbnModel& model, const SimConfig& config);

//! n draws of `node` given values of its selected parents (original scale).
Eigen::VectorXd
sample_node_given_parents(const SemModel& model,
                          const std::string& node,
                          const std::map<std::string, double>& parent_values,
                          Eigen::Index n,
                          uint64_t seed);

//! Root at its empirical alpha-quantile, then each node at its conditional median.
std::vector<std::pair<std::string, double>>
cond_median_path(const SemModel& model, double alpha);

} // namespace vinesem
