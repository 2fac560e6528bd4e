#include "vinesem/npcop.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include <cstring>

namespace vinesem {

namespace {

constexpr int G = NpCopula::kGrid;
constexpr double kCutoffSd = 7.0;

double
centre(int k)
{
  return (k + 0.5) / G;
}

Eigen::VectorXd
z_centres()
{
  Eigen::VectorXd z(G);
  for (int k = 0; k < G; ++k)
    z(k) = normal_quantile(centre(k));
  return z;
}

struct Kernel
{
  Eigen::Matrix2d inv;
  double norm;

  explicit Kernel(const Eigen::Matrix2d& h)
    : inv(h.inverse())
    , norm(1.0 / (2.0 * M_PI * std::sqrt(h.determinant())))
  {}

  double operator()(double dx, double dy) const
  {
    double q = inv(0, 0) * dx * dx + 2.0 * inv(0, 1) * dx * dy + inv(1, 1) * dy * dy;
    return norm * std::exp(-0.5 * q);
  }
};

// Gaussian-kernel estimate on the normal scale evaluated at all grid centres
Eigen::MatrixXd
z_density_on_grid(const Eigen::MatrixX2d& z, const Eigen::Matrix2d& h)
{
  const Eigen::VectorXd zc = z_centres();
  const double h11 = h(0, 0), h12 = h(0, 1), h22 = h(1, 1);
  const double beta = h12 / h11;
  const double s2 = h22 - h12 * h12 / h11;
  const double sx = std::sqrt(h11), sc = std::sqrt(s2);
  const double norm = 1.0 / (2.0 * M_PI * sx * sc);
  const double* zb = zc.data();
  const double* ze = zc.data() + G;

  Eigen::MatrixXd dens = Eigen::MatrixXd::Zero(G, G);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double z1 = z(i, 0), z2 = z(i, 1);
    int k0 = static_cast<int>(std::lower_bound(zb, ze, z1 - kCutoffSd * sx) - zb);
    int k1 = static_cast<int>(std::upper_bound(zb, ze, z1 + kCutoffSd * sx) - zb);
    for (int k = k0; k < k1; ++k) {
      double dx = zc(k) - z1;
      double wx = std::exp(-0.5 * dx * dx / h11);
      double m = z2 + beta * dx;
      int l0 = static_cast<int>(std::lower_bound(zb, ze, m - kCutoffSd * sc) - zb);
      int l1 = static_cast<int>(std::upper_bound(zb, ze, m + kCutoffSd * sc) - zb);
      for (int l = l0; l < l1; ++l) {
        double r = (zc(l) - m) / sc;
        dens(k, l) += wx * std::exp(-0.5 * r * r);
      }
    }
  }
  return dens * (norm / static_cast<double>(z.rows()));
}

// alternate row and column scaling until both conditionals integrate to one
void
sinkhorn(Eigen::MatrixXd& g)
{
  for (int it = 0; it < 5000; ++it) {
    Eigen::VectorXd rows = g.rowwise().mean();
    g.array().colwise() /= rows.array();
    Eigen::RowVectorXd cols = g.colwise().mean();
    g.array().rowwise() /= cols.array();
    double dev = (g.rowwise().mean().array() - 1.0).abs().maxCoeff();
    if (dev < 1e-13)
      return;
  }
}

// position of x among cell centres: index of the left centre and weight of the right
std::pair<int, double>
centre_bracket(double x)
{
  double t = x * G - 0.5;
  if (t <= 0.0)
    return { 0, 0.0 };
  if (t >= G - 1)
    return { G - 2, 1.0 };
  int l = static_cast<int>(t);
  return { l, t - l };
}

std::string
encode_doubles(const double* data, size_t count)
{
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<const char*, 6, 8>>;
  const char* bytes = reinterpret_cast<const char*>(data);
  size_t len = count * sizeof(double);
  std::string out(It(bytes), It(bytes + len));
  out.append((3 - len % 3) % 3, '=');
  return out;
}

std::vector<double>
decode_doubles(std::string text)
{
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  size_t pad = 0;
  while (!text.empty() && text.back() == '=') {
    text.pop_back();
    ++pad;
  }
  std::string bytes(It(text.cbegin()), It(text.cend()));
  if (bytes.size() % sizeof(double) != 0)
    throw UsageError("nonparametric copula: corrupt grid encoding");
  std::vector<double> out(bytes.size() / sizeof(double));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

} // namespace

NpCopula::NpCopula(Eigen::MatrixXd density_grid, Eigen::Matrix2d bandwidth, double edf, double loglik)
  : bandwidth_(std::move(bandwidth))
  , grid_(std::move(density_grid))
  , edf_(edf)
  , loglik_(loglik)
{
  if (grid_.rows() != G || grid_.cols() != G)
    throw UsageError("nonparametric copula: grid must be 201 x 201");
  if ((grid_.array() < 0.0).any())
    throw DomainError("nonparametric copula: negative density in grid");
  build_cumulatives();
}

void
NpCopula::build_cumulatives()
{
  cum_u_.setZero(G + 1, G);
  cum_v_.setZero(G + 1, G);
  for (int j = 0; j < G; ++j) {
    cum_u_.row(j + 1) = cum_u_.row(j) + grid_.row(j) / G;
    cum_v_.row(j + 1) = cum_v_.row(j) + grid_.col(j).transpose() / G;
  }
  // exact normalization of each conditional cumulative
  for (int l = 0; l < G; ++l) {
    cum_u_.col(l) /= cum_u_(G, l);
    cum_v_.col(l) /= cum_v_(G, l);
  }
}

double
NpCopula::pdf(double u, double v) const
{
  auto [k, a] = centre_bracket(u);
  auto [l, b] = centre_bracket(v);
  return (1 - a) * (1 - b) * grid_(k, l) + a * (1 - b) * grid_(k + 1, l) +
         (1 - a) * b * grid_(k, l + 1) + a * b * grid_(k + 1, l + 1);
}

double
NpCopula::hfunc(HDir dir, double u, double v) const
{
  // integrate along x given the conditioning coordinate c
  const Eigen::MatrixXd& cum = dir == HDir::given_second ? cum_u_ : cum_v_;
  double x = dir == HDir::given_second ? u : v;
  double c = dir == HDir::given_second ? v : u;
  auto [l, b] = centre_bracket(c);
  double t = std::clamp(x, 0.0, 1.0) * G;
  int j = std::min(static_cast<int>(t), G - 1);
  double f = t - j;
  auto at = [&](int row) { return (1 - b) * cum(row, l) + b * cum(row, l + 1); };
  return std::clamp((1 - f) * at(j) + f * at(j + 1), 0.0, 1.0);
}

double
NpCopula::hinv(HDir dir, double p, double cond) const
{
  const Eigen::MatrixXd& cum = dir == HDir::given_second ? cum_u_ : cum_v_;
  auto [l, b] = centre_bracket(cond);
  auto at = [&](int row) { return (1 - b) * cum(row, l) + b * cum(row, l + 1); };
  p = std::clamp(p, 0.0, 1.0);
  // first boundary whose cumulative reaches p
  int lo = 0, hi = G;
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    if (at(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  double a0 = at(lo), a1 = at(hi);
  double f = a1 > a0 ? (p - a0) / (a1 - a0) : 0.5;
  return (lo + std::clamp(f, 0.0, 1.0)) / G;
}

double
NpCopula::kendall_tau() const
{
  // tau = 4 E[C(U, V)] - 1 with C at cell midpoints of the piecewise-constant density
  Eigen::MatrixXd mass = grid_ / (double(G) * G);
  Eigen::MatrixXd corner = Eigen::MatrixXd::Zero(G + 1, G + 1);
  for (int k = 0; k < G; ++k)
    for (int l = 0; l < G; ++l)
      corner(k + 1, l + 1) = corner(k, l + 1) + corner(k + 1, l) - corner(k, l) + mass(k, l);
  double e = 0.0;
  for (int k = 0; k < G; ++k)
    for (int l = 0; l < G; ++l) {
      double c = 0.25 * (corner(k, l) + corner(k + 1, l) + corner(k, l + 1) + corner(k + 1, l + 1));
      e += mass(k, l) * c;
    }
  return std::clamp(4.0 * e - 1.0, -1.0, 1.0);
}

double
np_raw_density(const Eigen::MatrixX2d& z, const Eigen::Matrix2d& bandwidth, double u, double v)
{
  Kernel kern(bandwidth);
  double x = normal_quantile(clamp_unit(u)), y = normal_quantile(clamp_unit(v));
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    s += kern(x - z(i, 0), y - z(i, 1));
  return s / static_cast<double>(z.rows()) / (normal_pdf(x) * normal_pdf(y));
}

NpCopula
fit_np_pair(const PseudoObs& data)
{
  const Eigen::Index n = data.size();
  if (n < NpCopula::kMinSample)
    throw InsufficientDataError("fit_np_pair: need at least 30 observations, got " +
                                std::to_string(n));
  NpCopula cop;
  cop.z_.resize(n, 2);
  cop.z_.col(0) = normal_quantile(data.u().array()).matrix();
  cop.z_.col(1) = normal_quantile(data.v().array()).matrix();

  Eigen::MatrixX2d centred = cop.z_.rowwise() - cop.z_.colwise().mean();
  Eigen::Matrix2d cov = centred.transpose() * centred / static_cast<double>(n - 1);
  if (!(cov.determinant() > 1e-12 * cov.trace() * cov.trace()))
    throw DegenerateDataError("fit_np_pair: singular sample covariance");
  cop.bandwidth_ = std::pow(static_cast<double>(n), -1.0 / 3.0) * cov;

  // leave-one-out likelihood and self-weight shares from the pairwise kernel matrix
  Kernel kern(cop.bandwidth_);
  Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double k = kern(cop.z_(i, 0) - cop.z_(j, 0), cop.z_(i, 1) - cop.z_(j, 1));
      row_sum(i) += k;
      row_sum(j) += k;
    }
  const double k0 = kern.norm;
  double ll = 0.0, edf = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double f = std::max(row_sum(i) / static_cast<double>(n - 1), 1e-300);
    ll += std::log(f) - normal_logpdf(cop.z_(i, 0)) - normal_logpdf(cop.z_(i, 1));
    edf += k0 / (k0 + row_sum(i));
  }
  cop.loglik_ = ll;
  cop.edf_ = std::clamp(edf, 1.0, static_cast<double>(n));

  Eigen::MatrixXd g = z_density_on_grid(cop.z_, cop.bandwidth_);
  const Eigen::VectorXd zc = z_centres();
  Eigen::VectorXd phi = zc.unaryExpr([](double x) { return normal_pdf(x); });
  g.array().colwise() /= phi.array();
  g.array().rowwise() /= phi.transpose().array();
  g = g.cwiseMax(1e-300);
  sinkhorn(g);
  cop.grid_ = std::move(g);
  cop.build_cumulatives();
  return cop;
}

void
to_json(nlohmann::json& j, const NpCopula& cop)
{
  const Eigen::MatrixXd& g = cop.grid();
  const Eigen::Matrix2d& h = cop.bandwidth();
  j = nlohmann::json{ { "grid_size", NpCopula::kGrid },
                      { "grid_b64", encode_doubles(g.data(), static_cast<size_t>(g.size())) },
                      { "bandwidth", { { h(0, 0), h(0, 1) }, { h(1, 0), h(1, 1) } } },
                      { "edf", cop.edf() },
                      { "loglik", cop.loglik() } };
}

NpCopula
np_from_json(const nlohmann::json& j)
{
  if (j.at("grid_size").get<int>() != NpCopula::kGrid)
    throw UsageError("nonparametric copula: unsupported grid size");
  auto values = decode_doubles(j.at("grid_b64").get<std::string>());
  if (values.size() != static_cast<size_t>(G) * G)
    throw UsageError("nonparametric copula: grid has wrong number of cells");
  Eigen::MatrixXd g = Eigen::Map<Eigen::MatrixXd>(values.data(), G, G);
  auto hb = j.at("bandwidth");
  Eigen::Matrix2d h;
  h << hb[0][0].get<double>(), hb[0][1].get<double>(), hb[1][0].get<double>(), hb[1][1].get<double>();
  return NpCopula(std::move(g), h, j.at("edf").get<double>(), j.at("loglik").get<double>());
}

} // namespace vinesem
