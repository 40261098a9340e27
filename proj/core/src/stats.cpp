#include "fpl/stats.hpp"

#include <algorithm>
#include <cmath>

#include "fpl/errors.hpp"

namespace fpl {

double gamma_half_cdf(double x) {
  if (x <= 0.0) return 0.0;
  return std::erf(std::sqrt(x));
}

double rayleigh_tail(double x, double sigma) {
  if (x <= 0.0) return 1.0;
  const double u = x / sigma;
  return std::exp(-0.5 * u * u);
}

double rayleigh_sb_tail(double x, double sigma) {
  if (x <= 0.0) return 1.0;
  const double u = x / (sigma * std::sqrt(2.0));
  return std::erfc(u) + M_2_SQRTPI * u * std::exp(-u * u);
}

double ks_statistic(const std::vector<double>& sorted_xs,
                    const std::function<double(double)>& cdf) {
  const std::size_t n = sorted_xs.size();
  if (n == 0) raise(Errc::InsufficientEvents, "KS statistic of empty sample");
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(sorted_xs[i]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    d = std::max(d, std::max(std::fabs(f - lo), std::fabs(hi - f)));
  }
  return d;
}

double ks_statistic_weighted(
    const std::vector<std::pair<double, double>>& sorted_atoms,
    const std::function<double(double)>& cdf) {
  if (sorted_atoms.empty())
    raise(Errc::InsufficientEvents, "KS statistic of empty atom set");
  double total = 0.0;
  for (const auto& a : sorted_atoms) {
    if (!(a.second > 0.0))
      raise(Errc::OutOfRange, "KS atom weights must be positive");
    if (&a != &sorted_atoms.front() && a.first < (&a - 1)->first)
      raise(Errc::OutOfRange, "KS atoms must be sorted by position");
    total += a.second;
  }
  double d = 0.0, acc = 0.0;
  for (const auto& a : sorted_atoms) {
    const double f = cdf(a.first);
    const double before = acc / total;
    acc += a.second;
    const double after = acc / total;
    d = std::max(d, std::max(std::fabs(f - before), std::fabs(after - f)));
  }
  return d;
}

LineFit least_squares(const std::vector<double>& x,
                      const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2)
    raise(Errc::OutOfRange, "least squares needs two equal-length samples");
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0))
    raise(Errc::OutOfRange, "least squares requires non-degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = syy - fit.slope * sxy;
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) raise(Errc::InsufficientEvents, "mean of empty sample");
  double s = 0.0;
  for (const double v : xs) s += v;
  return s / static_cast<double>(xs.size());
}

}  // namespace fpl
