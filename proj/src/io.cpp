#include "vinesem/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vinesem {

namespace {

std::string
trim(std::string_view s)
{
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string>
split(const std::string& line)
{
  std::vector<std::string> out;
  std::string_view rest(line);
  for (;;) {
    size_t c = rest.find(',');
    out.push_back(trim(rest.substr(0, c)));
    if (c == std::string_view::npos)
      break;
    rest.remove_prefix(c + 1);
  }
  return out;
}

} // namespace

Eigen::Index
Dataset::index_of(const std::string& name) const
{
  for (size_t j = 0; j < names.size(); ++j)
    if (names[j] == name)
      return static_cast<Eigen::Index>(j);
  throw UsageError("data has no column '" + name + "'");
}

bool
Dataset::has(const std::string& name) const
{
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::map<std::string, double>
Dataset::row(Eigen::Index i) const
{
  std::map<std::string, double> out;
  for (size_t j = 0; j < names.size(); ++j)
    out[names[j]] = values(i, static_cast<Eigen::Index>(j));
  return out;
}

Dataset
parse_csv(std::istream& in, const std::string& source)
{
  Dataset d;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty())
      break;
  }
  if (trim(line).empty())
    throw UsageError(source + ": empty file, expected a header row");
  d.names = split(line);
  for (size_t j = 0; j < d.names.size(); ++j) {
    if (d.names[j].empty())
      throw UsageError(source + ":" + std::to_string(lineno) + ": empty column name in header");
    for (size_t k = 0; k < j; ++k)
      if (d.names[k] == d.names[j])
        throw UsageError(source + ":" + std::to_string(lineno) + ": duplicate column '" +
                         d.names[j] + "'");
  }

  std::vector<double> flat;
  size_t rows = 0;
  const size_t p = d.names.size();
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    auto fields = split(line);
    if (fields.size() != p)
      throw UsageError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(p) +
                       " fields, found " + std::to_string(fields.size()));
    for (size_t j = 0; j < p; ++j) {
      const std::string& f = fields[j];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
        throw UsageError(source + ":" + std::to_string(lineno) + ": field '" + d.names[j] +
                         "' is not a finite number: '" + f + "'");
      flat.push_back(v);
    }
    ++rows;
  }
  d.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
    flat.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
  return d;
}

Dataset
read_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open '" + path + "'");
  return parse_csv(in, path);
}

Dataset
log_transform(Dataset data)
{
  for (Eigen::Index j = 0; j < data.values.cols(); ++j)
    for (Eigen::Index i = 0; i < data.values.rows(); ++i) {
      if (!(data.values(i, j) > 0.0))
        throw UsageError("log transform: column '" + data.names[static_cast<size_t>(j)] +
                         "' has a non-positive value in data row " + std::to_string(i + 1));
      data.values(i, j) = std::log(data.values(i, j));
    }
  return data;
}

std::string
fmt6(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void
write_csv(std::ostream& out, const Dataset& data)
{
  for (size_t j = 0; j < data.names.size(); ++j)
    out << (j ? "," : "") << data.names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.values.cols(); ++j)
      out << (j ? "," : "") << fmt6(data.values(i, j));
    out << '\n';
  }
}

void
write_csv(const std::string& path, const Dataset& data)
{
  std::ofstream out(path);
  if (!out)
    throw UsageError("cannot write '" + path + "'");
  write_csv(out, data);
}

} // namespace vinesem
