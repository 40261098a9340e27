#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace fpl {

// CDF of Gamma(shape 1/2, scale 1): P[X <= x] = erf(sqrt(x)).
double gamma_half_cdf(double x);

// Rayleigh survival function exp(-x^2 / (2 sigma^2)).
double rayleigh_tail(double x, double sigma);

// Survival function of the size-biased Rayleigh(sigma) distribution,
// erfc(u) + (2 u / sqrt(pi)) exp(-u^2) with u = x / (sigma sqrt(2)).
double rayleigh_sb_tail(double x, double sigma);

// One-sample Kolmogorov-Smirnov statistic of an ascending sample against a
// continuous CDF: sup_x |ECDF(x) - cdf(x)| evaluated at the jump points.
double ks_statistic(const std::vector<double>& sorted_xs,
                    const std::function<double(double)>& cdf);

// Same statistic for a weighted atom set sorted by position; weights need
// only be positive, they are normalised internally.
double ks_statistic_weighted(
    const std::vector<std::pair<double, double>>& sorted_atoms,
    const std::function<double(double)>& cdf);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least-squares line through (x_i, y_i), n >= 2.
LineFit least_squares(const std::vector<double>& x,
                      const std::vector<double>& y);

double mean(const std::vector<double>& xs);

}  // namespace fpl
