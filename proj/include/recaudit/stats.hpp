#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "recaudit/core.hpp"

namespace recaudit::stats {

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased (n-1)
  std::size_t n = 0;
};

inline SampleMoments moments(std::span<const double> xs) {
  SampleMoments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n < 2) return m;
  double ss = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    ss += d * d;
  }
  m.variance = ss / static_cast<double>(m.n - 1);
  return m;
}

namespace detail {

// Continued-fraction evaluation for the regularized incomplete beta
// (Lentz's method, as in Numerical Recipes betacf).
inline double beta_cont_frac(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0))
    return bt * detail::beta_cont_frac(a, b, x) / a;
  return 1.0 - bt * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

// Two-sided tail probability under Student's t with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double x = df / (df + t * t);
  return incomplete_beta(df / 2.0, 0.5, x);
}

inline double student_t_cdf(double t, double df) {
  const double p = student_t_two_sided_p(t, df);
  return t >= 0.0 ? 1.0 - p / 2.0 : p / 2.0;
}

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

// Welch's unequal-variance two-sample test, two-sided p via the
// Welch–Satterthwaite degrees of freedom. Degenerate samples (zero
// variance on both sides) resolve by convention: equal means -> p = 1,
// different means -> p = 0.
inline TTestResult welch_t_test(std::span<const double> a,
                                std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw Error("welch_t_test: each sample needs at least 2 values");
  const SampleMoments ma = moments(a);
  const SampleMoments mb = moments(b);
  const double va_n = ma.variance / static_cast<double>(ma.n);
  const double vb_n = mb.variance / static_cast<double>(mb.n);
  const double diff = ma.mean - mb.mean;
  TTestResult r;
  if (va_n + vb_n == 0.0) {
    if (diff == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
      r.p = 0.0;
    }
    r.df = static_cast<double>(ma.n + mb.n - 2);
    return r;
  }
  const double se = std::sqrt(va_n + vb_n);
  r.t = diff / se;
  const double num = (va_n + vb_n) * (va_n + vb_n);
  const double den = va_n * va_n / static_cast<double>(ma.n - 1) +
                     vb_n * vb_n / static_cast<double>(mb.n - 1);
  r.df = num / den;
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

// Classic pooled-variance Student's test; kept for sensitivity analysis.
inline TTestResult student_t_test(std::span<const double> a,
                                  std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw Error("student_t_test: each sample needs at least 2 values");
  const SampleMoments ma = moments(a);
  const SampleMoments mb = moments(b);
  const double diff = ma.mean - mb.mean;
  const double df = static_cast<double>(ma.n + mb.n - 2);
  const double pooled =
      ((ma.n - 1) * ma.variance + (mb.n - 1) * mb.variance) / df;
  TTestResult r;
  r.df = df;
  if (pooled == 0.0) {
    if (diff == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
      r.p = 0.0;
    }
    return r;
  }
  const double se = std::sqrt(pooled * (1.0 / static_cast<double>(ma.n) +
                                        1.0 / static_cast<double>(mb.n)));
  r.t = diff / se;
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace recaudit::stats
