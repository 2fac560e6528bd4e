#include "vinesem/stats.hpp"
#include "vinesem/core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <numeric>

namespace vinesem {

double
bivariate_normal_cdf(double h, double k, double rho)
{
  if (std::isinf(h) || std::isinf(k)) {
    if (h == -INFINITY || k == -INFINITY)
      return 0.0;
    if (h == INFINITY)
      return normal_cdf(k);
    return normal_cdf(h);
  }
  if (rho == 0.0)
    return normal_cdf(h) * normal_cdf(k);
  // Sheppard's formula: integrate the density of the correlation path
  double hk = h * k;
  double hs = h * h + k * k;
  auto integrand = [=](double t) {
    double s = std::sin(t);
    double c2 = 1.0 - s * s;
    if (c2 <= 0.0)
      return 0.0;
    return std::exp(-(hs - 2.0 * hk * s) / (2.0 * c2));
  };
  double a = std::asin(std::clamp(rho, -1.0, 1.0));
  double val = stats::integrate(integrand, 0.0, a, 1e-13);
  double p = normal_cdf(h) * normal_cdf(k) + val / (2.0 * M_PI);
  return std::clamp(p, 0.0, 1.0);
}

namespace stats {

namespace {

// merge sort on y counting the number of exchanges (discordant pairs)
int64_t
merge_count(std::vector<double>& y, std::vector<double>& buf, size_t lo, size_t hi)
{
  if (hi - lo < 2)
    return 0;
  size_t mid = lo + (hi - lo) / 2;
  int64_t swaps = merge_count(y, buf, lo, mid) + merge_count(y, buf, mid, hi);
  size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (y[j] < y[i]) {
      swaps += static_cast<int64_t>(mid - i);
      buf[k++] = y[j++];
    } else {
      buf[k++] = y[i++];
    }
  }
  while (i < mid)
    buf[k++] = y[i++];
  while (j < hi)
    buf[k++] = y[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, y.begin() + lo);
  return swaps;
}

int64_t
tie_pairs(const std::vector<double>& sorted)
{
  int64_t total = 0;
  size_t i = 0;
  while (i < sorted.size()) {
    size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i])
      ++j;
    int64_t t = static_cast<int64_t>(j - i);
    total += t * (t - 1) / 2;
    i = j;
  }
  return total;
}

} // namespace

double
kendall_tau(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
  if (x.size() != y.size())
    throw UsageError("kendall_tau: length mismatch");
  size_t n = static_cast<size_t>(x.size());
  if (n < 2)
    return 0.0;
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return x(a) < x(b) || (x(a) == x(b) && y(a) < y(b));
  });

  int64_t n1 = 0, n3 = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i + 1;
    while (j < n && x(idx[j]) == x(idx[i]))
      ++j;
    int64_t t = static_cast<int64_t>(j - i);
    n1 += t * (t - 1) / 2;
    size_t a = i;
    while (a < j) {
      size_t b = a + 1;
      while (b < j && y(idx[b]) == y(idx[a]))
        ++b;
      int64_t u = static_cast<int64_t>(b - a);
      n3 += u * (u - 1) / 2;
      a = b;
    }
    i = j;
  }

  std::vector<double> ys(n), buf(n);
  for (size_t k = 0; k < n; ++k)
    ys[k] = y(idx[k]);
  int64_t swaps = merge_count(ys, buf, 0, n);
  int64_t n2 = tie_pairs(ys);
  double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  double num = n0 - n1 - n2 + n3 - 2.0 * static_cast<double>(swaps);
  double den = std::sqrt((n0 - n1) * (n0 - n2));
  return den > 0.0 ? num / den : 0.0;
}

double
quantile(Eigen::VectorXd x, double p)
{
  if (x.size() == 0)
    throw UsageError("quantile: empty sample");
  std::sort(x.data(), x.data() + x.size());
  double h = (static_cast<double>(x.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  auto lo = static_cast<Eigen::Index>(std::floor(h));
  auto hi = std::min<Eigen::Index>(lo + 1, x.size() - 1);
  return x(lo) + (h - static_cast<double>(lo)) * (x(hi) - x(lo));
}

double
mean(const Eigen::VectorXd& x)
{
  return x.mean();
}

double
sd_ml(const Eigen::VectorXd& x)
{
  double m = x.mean();
  return std::sqrt((x.array() - m).square().mean());
}

double
ks_statistic(const Eigen::VectorXd& x, const std::function<double(double)>& cdf)
{
  Eigen::VectorXd s = x;
  std::sort(s.data(), s.data() + s.size());
  double n = static_cast<double>(s.size());
  double d = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    double f = cdf(s(i));
    d = std::max({ d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f });
  }
  return d;
}

Eigen::VectorXd
to_pseudo_obs(const Eigen::VectorXd& x)
{
  Eigen::Index n = x.size();
  std::vector<Eigen::Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x(a) < x(b); });
  Eigen::VectorXd r(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i + 1;
    while (j < n && x(idx[j]) == x(idx[i]))
      ++j;
    double avg = 0.5 * static_cast<double>(i + j + 1);
    for (Eigen::Index k = i; k < j; ++k)
      r(idx[k]) = avg / static_cast<double>(n + 1);
    i = j;
  }
  return r;
}

std::pair<double, double>
minimize_scalar(const std::function<double(double)>& f,
                double lo,
                double hi,
                double tol,
                int max_iter)
{
  int bits = static_cast<int>(std::ceil(-std::log2(tol)));
  bits = std::clamp(bits, 8, std::numeric_limits<double>::digits / 2);
  boost::uintmax_t it = static_cast<boost::uintmax_t>(max_iter);
  auto res = boost::math::tools::brent_find_minima(f, lo, hi, bits, it);
  return { res.first, res.second };
}

double
find_root(const std::function<double(double)>& f,
          double lo,
          double hi,
          double abs_tol,
          int max_iter)
{
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0)
    return lo;
  if (fhi == 0.0)
    return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    return std::abs(flo) < std::abs(fhi) ? lo : hi;
  boost::uintmax_t it = static_cast<boost::uintmax_t>(max_iter);
  auto tol = [abs_tol](double a, double b) { return std::abs(b - a) <= abs_tol; };
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, it);
  if (it >= static_cast<boost::uintmax_t>(max_iter) && std::abs(r.second - r.first) > abs_tol)
    throw NumericError("find_root: no convergence after " + std::to_string(max_iter) +
                       " iterations");
  return 0.5 * (r.first + r.second);
}

NelderMeadResult
nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
            Eigen::VectorXd x0,
            double step,
            double tol,
            int max_iter)
{
  const Eigen::Index d = x0.size();
  std::vector<Eigen::VectorXd> simplex(static_cast<size_t>(d + 1), x0);
  std::vector<double> values(static_cast<size_t>(d + 1));
  for (Eigen::Index j = 0; j < d; ++j)
    simplex[static_cast<size_t>(j + 1)](j) += step;
  for (size_t j = 0; j < simplex.size(); ++j)
    values[j] = f(simplex[j]);

  std::vector<size_t> order(simplex.size());
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
    size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    if (std::abs(values[worst] - values[best]) <= tol * (std::abs(values[best]) + tol))
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (size_t j = 0; j < simplex.size(); ++j)
      if (j != worst)
        centroid += simplex[j];
    centroid /= static_cast<double>(d);

    Eigen::VectorXd xr = centroid + (centroid - simplex[worst]);
    double fr = f(xr);
    if (fr < values[best]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[worst]);
      double fe = f(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
    } else if (fr < values[second]) {
      simplex[worst] = xr;
      values[worst] = fr;
    } else {
      bool outside = fr < values[worst];
      Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                   : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
      double fc = f(xc);
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = xc;
        values[worst] = fc;
      } else {
        for (size_t j = 0; j < simplex.size(); ++j) {
          if (j == best)
            continue;
          simplex[j] = simplex[best] + 0.5 * (simplex[j] - simplex[best]);
          values[j] = f(simplex[j]);
        }
      }
    }
  }
  size_t best = static_cast<size_t>(
    std::distance(values.begin(), std::min_element(values.begin(), values.end())));
  return { simplex[best], values[best], iter };
}

double
integrate(const std::function<double(double)>& f, double a, double b, double tol)
{
  if (a == b)
    return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &err);
}

} // namespace stats
} // namespace vinesem
