#pragma once

// Small statistics kit shared by the estimators and tests: normal-theory
// confidence intervals, least squares, exponential tail fits, total
// variation against uniform, and a chi-square p-value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dynperc/errors.hpp"

namespace dynperc {

inline constexpr double kZ95 = 1.959963984540054;  // two-sided 95% normal quantile

struct MeanCi {
  double mean = 0.0;
  double ci_half = 0.0;  // 1.96 * sd / sqrt(count)
  int64_t count = 0;
};

inline MeanCi mean_ci(std::span<const double> xs) {
  MeanCi out;
  out.count = static_cast<int64_t>(xs.size());
  if (out.count == 0) throw InsufficientData("mean_ci: empty sample");
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(out.count);
  if (out.count > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    const double var = ss / static_cast<double>(out.count - 1);
    out.ci_half = kZ95 * std::sqrt(var / static_cast<double>(out.count));
  }
  return out;
}

inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw InsufficientData("sample_variance: need at least 2 points");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw InsufficientData("least_squares: need matched samples, >= 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw InsufficientData("least_squares: degenerate x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

struct TailFit {
  double rate = 0.0;       // decay rate of P(X >= r), i.e. -slope of the log tail
  double r_squared = 0.0;
  std::vector<int64_t> r_values;   // thresholds that entered the fit
  std::vector<double> log_tail;    // log empirical tail at those thresholds
};

// Fit log P(X >= r) ~ a - rate * r over integer thresholds in [r_min, r_max].
// Thresholds keep their point only while at least kTailMinSurvivors samples
// survive; fewer than 5 usable thresholds is InsufficientData.
inline constexpr int64_t kTailMinSurvivors = 10;

inline TailFit tail_fit(std::span<const int64_t> samples, int64_t r_min, int64_t r_max) {
  if (samples.empty()) throw InsufficientData("tail_fit: empty sample");
  if (r_min > r_max) throw InvalidParams("tail_fit: r_min > r_max");
  const double n = static_cast<double>(samples.size());
  TailFit out;
  std::vector<double> xs, ys;
  for (int64_t r = r_min; r <= r_max; ++r) {
    int64_t surv = 0;
    for (int64_t x : samples) surv += (x >= r);
    if (surv < kTailMinSurvivors) continue;
    out.r_values.push_back(r);
    out.log_tail.push_back(std::log(static_cast<double>(surv) / n));
    xs.push_back(static_cast<double>(r));
    ys.push_back(out.log_tail.back());
  }
  if (xs.size() < 5) throw InsufficientData("tail_fit: fewer than 5 usable thresholds");
  const LineFit f = least_squares(xs, ys);
  out.rate = -f.slope;
  out.r_squared = f.r_squared;
  return out;
}

// TV between an empirical law given by counts over all states and the
// uniform law on those states.
inline double tv_to_uniform(std::span<const int64_t> counts, int64_t total) {
  if (total <= 0 || counts.empty()) throw InsufficientData("tv_to_uniform: empty sample");
  const double u = 1.0 / static_cast<double>(counts.size());
  double tv = 0.0;
  for (int64_t c : counts) tv += std::abs(static_cast<double>(c) / static_cast<double>(total) - u);
  return 0.5 * tv;
}

inline double tv_distance(std::span<const double> a, std::span<const double> b) {
  double tv = 0.0;
  for (size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return 0.5 * tv;
}

inline double lag1_autocorr(std::span<const double> xs) {
  if (xs.size() < 3) throw InsufficientData("lag1_autocorr: need at least 3 points");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - mean;
    den += d * d;
    if (i + 1 < xs.size()) num += d * (xs[i + 1] - mean);
  }
  if (den == 0.0) return 0.0;
  return num / den;
}

// Regularized upper incomplete gamma Q(a, x), series / continued fraction
// split at x = a + 1.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw InvalidParams("gamma_q: need x >= 0, a > 0");
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

// Upper-tail p-value of a chi-square statistic.
inline double chi_square_pvalue(double stat, int dof) {
  if (dof <= 0) throw InvalidParams("chi_square_pvalue: dof must be positive");
  return gamma_q(0.5 * static_cast<double>(dof), 0.5 * stat);
}

}  // namespace dynperc
