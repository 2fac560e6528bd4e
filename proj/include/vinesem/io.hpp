#pragma once

#include "vinesem/core.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace vinesem {

//! Column-named numeric table; rows are observations.
struct Dataset
{
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  Eigen::Index rows() const { return values.rows(); }
  //! Throws UsageError naming the column when absent.
  Eigen::Index index_of(const std::string& name) const;
  bool has(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const { return values.col(index_of(name)); }
  //! One observation as a name -> value map.
  std::map<std::string, double> row(Eigen::Index i) const;
};

//! Reads a headered CSV of numbers; errors name the file line and field.
Dataset
read_csv(const std::string& path);

Dataset
parse_csv(std::istream& in, const std::string& source = "<stream>");

//! Natural log of every entry; non-positive values are a usage error.
Dataset
log_transform(Dataset data);

//! Formats with 6 significant digits.
std::string
fmt6(double x);

void
write_csv(const std::string& path, const Dataset& data);

void
write_csv(std::ostream& out, const Dataset& data);

} // namespace vinesem
